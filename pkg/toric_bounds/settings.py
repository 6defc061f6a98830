from typing import Any, Dict

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Application
    APP_NAME: str = "Toric Spectral Bounds"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Exact integration
    DEGREE_CAP: int = 6  # max monomial degree in moment tables

    # Quadrature for the Calabi gradient Gram matrix
    QUADRATURE_ORDER: int = 40  # Gauss points per direction per triangle
    QUADRATURE_RTOL: float = 1e-6  # relative change tolerated on order doubling

    # Eigen solving
    EIGEN_RESIDUAL_TOL: float = 1e-10
    ZERO_EIGEN_RTOL: float = 1e-9  # "positive" means above this times the largest eigenvalue
    TIE_RTOL: float = 1e-9  # eigenvalues this close count as one multiple eigenvalue

    # Root finding
    BISECTION_TOL: float = 1e-12

    # Calabi sweep
    SWEEP_AMIN: float = -0.99
    SWEEP_AMAX: float = 1.99
    SWEEP_COUNT: int = 100
    SWEEP_WORKERS: int = 4

    # Reproducibility
    SEED: int = 20240607
    MC_SAMPLES: int = 200_000

    # Output
    CSV_DIGITS: int = 12

    class Config:
        env_file = ".env"
        env_prefix = "TORIC_"
        case_sensitive = False
        extra = "ignore"

    def describe(self) -> Dict[str, Any]:
        """Configuration snapshot embedded in report headers"""
        return {
            "degree_cap": self.DEGREE_CAP,
            "quadrature_order": self.QUADRATURE_ORDER,
            "quadrature_rtol": self.QUADRATURE_RTOL,
            "eigen_residual_tol": self.EIGEN_RESIDUAL_TOL,
            "zero_eigen_rtol": self.ZERO_EIGEN_RTOL,
            "bisection_tol": self.BISECTION_TOL,
            "seed": self.SEED,
            "csv_digits": self.CSV_DIGITS,
        }


settings = Settings()
