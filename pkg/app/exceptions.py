from typing import List, Optional


class TrackerError(Exception):
    """Erro base do rastreador"""


class ConfigError(TrackerError, ValueError):
    """Configuração inválida; carrega todas as violações encontradas"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("Configuração inválida: " + "; ".join(self.violations))


class DataError(TrackerError, ValueError):
    """
    Registro de entrada inválido (arquivo ou quadro).
    `path`/`line` identificam linhas de arquivo; `index` identifica a detecção no quadro.
    """

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        index: Optional[int] = None,
    ):
        self.path = path
        self.line = line
        self.index = index
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"linha {line}: "
        super().__init__(f"{where}{message}")


class OutOfFrameError(TrackerError):
    """A caixa não cobre nenhum pixel da imagem"""
