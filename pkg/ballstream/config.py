"""Configuration management for ballstream."""

import os
from dotenv import load_dotenv

# Load environment variables from .env file if it exists
load_dotenv()


def _env_flag(name: str, default: bool = False) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in {"1", "true", "yes", "on"}


class Config:
    """Configuration class for ballstream."""

    def __init__(self):
        # Output directory
        self.out_dir: str = os.getenv("BALLSTREAM_OUT_DIR", "./out")

        # Force the linear-scan nearest-center index (debugging / oracle runs)
        self.linear_index: bool = _env_flag("BALLSTREAM_LINEAR_INDEX")

        # Default CLI values
        self.default_seed: int = int(os.getenv("BALLSTREAM_SEED", "0"))
        self.default_rate: float = 1.0
        self.default_c_hat: float = 1.0
        self.default_d_hat: float = 2.0
        self.default_variant: str = "auto-adj"

        # Evaluation policy
        self.trace_points: int = 1000
        self.max_skip_fraction: float = 0.01
        self.skip_check_after: int = 1000

        # Smallest radius a ball may be created with
        self.radius_floor: float = 1e-12

    @property
    def logs_dir(self) -> str:
        """Path to logs directory."""
        return os.path.join(self.out_dir, "logs")

    def results_csv(self, out_dir: str, stem: str = "results") -> str:
        """Path to a results CSV (results.csv, or sweep.csv) inside an output directory."""
        return os.path.join(out_dir, f"{stem}.csv")

    def results_json(self, out_dir: str, stem: str = "results") -> str:
        """Path to a results JSON inside an output directory."""
        return os.path.join(out_dir, f"{stem}.json")

    def summary_csv(self, out_dir: str) -> str:
        """Path to the sweep summary CSV inside an output directory."""
        return os.path.join(out_dir, "summary.csv")

    def ensure_directories(self, *extra: str):
        """Create necessary directories if they don't exist."""
        os.makedirs(self.logs_dir, exist_ok=True)
        for path in extra:
            os.makedirs(path, exist_ok=True)


# Global config instance
config = Config()
