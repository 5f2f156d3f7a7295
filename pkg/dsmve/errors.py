import io
import traceback
from typing import Iterable, Optional, Sequence


class DsmveError(Exception):
    """Base class for errors raised by dsmve"""

    pass


class UsageError(DsmveError, ValueError):
    """For invalid call arguments e.g. non-divisible coarsening factors
    or unequal empirical measure sizes
    """

    pass


class DomainError(UsageError):
    """For arguments outside a mathematical domain e.g. negative times"""

    pass


class ConfigError(DsmveError):
    """For invalid config files and CLI overrides. field is the dotted
    path of the offending config key e.g. 'model.params.a3'
    """

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class UnknownKeysError(ConfigError):
    def __init__(self, keys: Iterable[str], block: str = ""):
        self.keys = sorted(keys)
        super().__init__(f"unknown keys {self.keys}", field=block or None)


class NumericalError(DsmveError):
    """For numerical failures: embedding, pivot, or moment blow-up"""

    pass


class EmbeddingError(NumericalError):
    def __init__(self, embedding_size: int, min_eigenvalue: float, tolerance: float):
        self.embedding_size = embedding_size
        self.min_eigenvalue = min_eigenvalue
        self.tolerance = tolerance
        super().__init__(
            f"circulant embedding of size {embedding_size} has eigenvalue {min_eigenvalue!r} "
            f"below -{tolerance!r}; retry with embedding size {2 * embedding_size}"
        )


class NumericalDegeneracyError(NumericalError):
    def __init__(self, pivot: int, size: int):
        self.pivot = pivot
        super().__init__(
            f"Cholesky factorization of the {size}x{size} covariance failed at pivot {pivot}"
        )


class MomentBlowUpError(NumericalError):
    def __init__(self, step: int, particles: Sequence[int]):
        self.step = step
        self.particles = list(particles)
        super().__init__(
            f"non-finite state at step {step} for {len(self.particles)} particle(s) "
            f"(first: {self.particles[:5]})"
        )


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def exit_code_for(e: BaseException) -> Optional[int]:
    "returns the CLI exit code for an exception or None for unexpected errors"
    if isinstance(e, (ConfigError, UsageError)):
        return EXIT_CONFIG
    elif isinstance(e, NumericalError):
        return EXIT_NUMERICAL
    elif isinstance(e, OSError):
        return EXIT_IO
    return None


def exc_to_str() -> str:
    tb_file = io.StringIO()
    traceback.print_exc(file=tb_file)
    return tb_file.getvalue()
