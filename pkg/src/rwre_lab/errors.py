"""Error taxonomy shared across modules.

The CLI maps these onto process exit codes: ConfigError -> 3,
BudgetError -> 2.  Everything else is an ordinary traceback.
"""


class ConfigError(ValueError):
    """Malformed or incomplete configuration input."""


class BudgetError(RuntimeError):
    """A vertex/state/replicate budget would be exceeded; nothing was truncated."""


class ExtinctionError(RuntimeError):
    """All particles died inside one splitting stage; the estimate is undefined."""

    def __init__(self, stage: int, upto_step: int, ln_so_far: float):
        super().__init__(
            f"splitting extinction in stage {stage} (steps through {upto_step}); "
            f"partial ln-estimate {ln_so_far:.6g}"
        )
        self.stage = stage
        self.upto_step = upto_step
        self.ln_so_far = ln_so_far
