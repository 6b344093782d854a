import typer

from qle.commands import compare, embed, gen, qembed
from qle.config import settings
from qle.logging_config import configure_logging

app = typer.Typer(
    help="Laplacian eigenmaps, classical and simulated quantum.",
    no_args_is_help=True,
    add_completion=False,
)


@app.callback()
def main(log_level: str = typer.Option(settings.log_level, "--log-level", help="DEBUG, INFO, WARNING or ERROR.")):
    configure_logging(log_level)


app.command("gen")(gen.gen)
app.command("embed")(embed.embed)
app.command("qembed")(qembed.qembed)
app.command("compare")(compare.compare)
