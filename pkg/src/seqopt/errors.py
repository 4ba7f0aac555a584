"""Exception types shared across the package."""


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during an optimization run."""


class ConfigError(ValueError):
    """Invalid run configuration; message lists every problem found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
