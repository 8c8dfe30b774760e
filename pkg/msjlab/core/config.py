"""Application configuration"""
import os
from dotenv import load_dotenv

load_dotenv()


class Settings:
    """Application settings loaded from environment variables"""

    # Application
    APP_TITLE: str = "msjlab"
    APP_VERSION: str = "1.0.0"
    LOG_LEVEL: str = os.getenv("MSJLAB_LOG_LEVEL", "INFO")

    # Parallelism
    THREADS: int = int(os.getenv("MSJLAB_THREADS", str(os.cpu_count() or 1)))

    # Exact 1-and-n evaluation
    MATERIALIZE_CAP: int = int(os.getenv("MSJLAB_MATERIALIZE_CAP", "10000000"))
    VERIFY_MAX_N: int = int(os.getenv("MSJLAB_VERIFY_MAX_N", "200000"))

    # Saturated-system oracle
    STATE_CAP: int = int(os.getenv("MSJLAB_STATE_CAP", "2000000"))
    DENSE_MAX_STATES: int = int(os.getenv("MSJLAB_DENSE_MAX_STATES", "2000"))

    # Simulation
    MAX_QUEUE: int = int(os.getenv("MSJLAB_MAX_QUEUE", "10000000"))
    WARMUP_FRACTION: float = float(os.getenv("MSJLAB_WARMUP_FRACTION", "0.1"))
    BATCHES: int = int(os.getenv("MSJLAB_BATCHES", "20"))
    RNG_ALGORITHM: str = "numpy.Philox"

    @property
    def workers(self) -> int:
        """Worker processes available to sweeps (never below one)"""
        return max(1, self.THREADS)


# Global settings instance
settings = Settings()
