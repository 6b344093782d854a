from typing import Literal, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Graph construction
    k: int = 2
    kernel: Literal["heat", "binary"] = "heat"
    heat_t: Optional[float] = None  # None -> mean squared neighbor distance

    # Embedding
    dims: int = 2
    eps_rank: float = 1e-10

    # Quantum simulation
    phase_bits: int = 8
    scale: float = 0.25
    shots: int = 0
    seed: int = 0
    max_quantum_nodes: int = 16
    max_register_qubits: int = 24
    isolation_input: Literal["column", "uniform", "uniform-padded", "basis"] = "column"
    refine_passes: int = 200
    refine_tol: float = 1e-10

    # Synthetic datasets
    generate_m: int = 12
    noise: float = 0.0

    # Reporting
    tol: float = 1e-2
    log_level: str = "INFO"
    record_timings: bool = False

    model_config = SettingsConfigDict(env_file=".env", env_prefix="QLE_")


settings = Settings()
