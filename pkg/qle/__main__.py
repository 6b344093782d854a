from qle.main import app

app(prog_name="qle")
