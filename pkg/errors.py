from typing import Optional


class CompSplitError(Exception):
    """
    Error base del toolkit. Equivalente a HTTPException: lleva un detalle
    legible y el código de salida que debe devolver la CLI.
    """

    def __init__(self, detail: str, exit_code: int = 1):
        super().__init__(detail)
        self.detail = detail
        self.exit_code = exit_code

    def __str__(self) -> str:
        return self.detail


class SchemaError(CompSplitError):
    """Esquema de atributos inválido o conjuntos con esquemas distintos"""


class EligibilityError(CompSplitError):
    """Una división no cumple la condición de elegibilidad"""

    def __init__(self, detail: str, report: Optional[dict] = None):
        super().__init__(detail)
        self.report = report or {}


class UndefinedDistributionError(CompSplitError):
    """Distribución de compuestos sobre un conjunto vacío"""


class SplitConstructionError(CompSplitError):
    """Ningún candidato válido para el protocolo pedido"""


class RejectionBudgetExhausted(SplitConstructionError):
    """Se agotaron los intentos del muestreo por rechazo"""


class NoPseudoCompCandidates(CompSplitError):
    """La clausura de recombinación no aporta combinaciones nuevas"""

    def __init__(self, detail: str = "no pseudo-comp candidates"):
        super().__init__(detail)


class PoolExhausted(CompSplitError):
    """El pool no contiene registros con combinaciones admisibles"""

    def __init__(self, detail: str = "pool exhausted"):
        super().__init__(detail)


class MalformedRecordError(CompSplitError):
    """Línea mal formada en un dataset (incluye número de línea)"""

    def __init__(self, detail: str, path: Optional[str] = None, line_number: Optional[int] = None):
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
        if line_number is not None:
            prefix = f"{prefix}{line_number}: "
        elif prefix:
            prefix = f"{prefix} "
        super().__init__(f"{prefix}{detail}")
        self.path = path
        self.line_number = line_number


class ScoreFileError(CompSplitError):
    """Archivo de puntuaciones inválido"""


class MissingCellError(CompSplitError):
    """Falta una celda obligatoria para la agregación"""
