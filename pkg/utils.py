import functools
import logging
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from tqdm import tqdm

from config import COMPSPLIT_THREADS, LOG_LEVEL, SIGNIFICANT_DIGITS
from errors import CompSplitError

T = TypeVar("T")
R = TypeVar("R")

# Salida para humanos (tablas, resúmenes). Los logs van a stderr.
console = Console()
error_console = Console(stderr=True)

_logging_lock = threading.Lock()
_logging_configured = False


def get_logger(name: str) -> logging.Logger:
    """
    Devuelve un logger con RichHandler configurado una sola vez.

    Args:
        name: Nombre del logger (normalmente __name__)

    Returns:
        logging.Logger listo para usar
    """
    global _logging_configured

    with _logging_lock:
        if not _logging_configured:
            handler = RichHandler(
                console=error_console,
                show_time=False,
                show_path=False,
                markup=False,
            )
            root = logging.getLogger("compsplit")
            root.addHandler(handler)
            root.setLevel(LOG_LEVEL.upper())
            root.propagate = False
            _logging_configured = True

    return logging.getLogger(f"compsplit.{name}")


def format_number(value: float) -> float:
    """Redondea a 12 dígitos significativos para serializar"""
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}")


def spawn_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """
    Deriva un generador independiente por reinicio a partir de una semilla.

    El i-ésimo generador sólo depende de (seed, i), por lo que el orden de
    ejecución de los reinicios no afecta al resultado.

    Args:
        seed: Semilla raíz
        count: Número de generadores

    Returns:
        Lista de numpy.random.Generator
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


def run_in_pool(fn: Callable[[T], R], items: Sequence[T], threads: Optional[int] = None) -> List[R]:
    """
    Ejecuta fn sobre cada item, en paralelo si hay más de un hilo.
    El resultado respeta siempre el orden de items.

    Args:
        fn: Función pura a aplicar
        items: Entradas
        threads: Máximo de hilos (por defecto COMPSPLIT_THREADS)

    Returns:
        Lista de resultados en el mismo orden que items
    """
    workers = threads if threads is not None else COMPSPLIT_THREADS
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def progress(iterable: Iterable[Any], total: Optional[int] = None, desc: str = "") -> Iterable[Any]:
    """Barra de progreso sólo cuando stderr es una terminal"""
    return tqdm(iterable, total=total, desc=desc, leave=False, disable=not sys.stderr.isatty())


# Campos de los modelos de configuración -> opción de la CLI que los fija
CLI_FLAGS = {
    "t1_restarts": "--t1",
    "t2_steps": "--t2",
    "eta_threshold": "--eta",
    "alpha": "--alpha",
    "rng_seed": "--seed",
    "seed": "--seed",
    "objective": "--objective",
    "only_optimal": "--only-optimal",
    "enumeration_budget": "--enum-budget",
    "alpha_lr": "--alpha-lr",
    "beta_lr": "--beta-lr",
    "lambda_weight": "--lambda",
    "batch_size": "--batch-size",
    "pcomp_size": "--size",
    "steps": "--steps",
    "aux_loss_weight": "--aux-weight",
    "second_order": "--second-order",
    "sequence_length": "--length",
    "sizes": "--shape",
}


def cli_flag(location: Sequence[Any]) -> str:
    """Nombre de la opción de la CLI para la ruta de un error de pydantic"""
    field = str(location[0]) if location else ""
    return CLI_FLAGS.get(field, field)


def handle_errors(fn: Callable[..., R]) -> Callable[..., R]:
    """
    Traduce los errores de dominio a un código de salida de la CLI.

    CompSplitError usa su propio exit_code; los ValidationError de pydantic
    salen con 1. El detalle se imprime en stderr.
    """
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CompSplitError as e:
            error_console.print(f"❌ {e.detail}", markup=False)
            raise typer.Exit(code=e.exit_code)
        except ValidationError as e:
            first = e.errors()[0]
            flag = cli_flag(first["loc"]) or e.title
            error_console.print(f"❌ parámetro inválido {flag}: {first['msg']}", markup=False)
            raise typer.Exit(code=1)

    return wrapper
