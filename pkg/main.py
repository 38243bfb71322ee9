import sys
from typing import List, Optional

import typer
from dotenv import load_dotenv

from divergence_module.routes import router as divergence_router
from meta_training.routes import router as meta_training_router
from protocols.routes import router as protocols_router
from sampler.routes import router as sampler_router
from schema_module.routes import router as schema_router
from stats.routes import router as stats_router
from utils import error_console

load_dotenv()

# --- Creación de la aplicación CLI ---
app = typer.Typer(
    name="compsplit",
    help="Divisiones composicionales de benchmarks de generación controlable y Meta-MCTG de juguete.",
    no_args_is_help=True,
    add_completion=False,
)

# Incluir routers
for router in (
    protocols_router,
    divergence_router,
    schema_router,
    sampler_router,
    stats_router,
    meta_training_router,
):
    app.registered_commands.extend(router.registered_commands)


def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    """
    Ejecuta la CLI y devuelve el código de salida:
    0 éxito, 1 error de validación, 2 error de uso.

    En modo standalone typer ya traduce los errores de uso a 2 y
    typer.Exit a su código; aquí sólo se recoge el SystemExit.
    """
    try:
        app(args=argv, prog_name="compsplit")
    except SystemExit as e:
        if e.code is None:
            return 0
        if isinstance(e.code, int):
            return e.code
        error_console.print(str(e.code), markup=False)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(cli_dispatch())
