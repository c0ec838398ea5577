from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Application
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    API_V1_PREFIX: str = "/api/1.0"
    PROJECT_NAME: str = "PI Bell Certifier"
    FORMAT_VERSION: str = "1.0"

    # Vertex enumeration
    VERTEX_BUDGET: int = 10**8

    # Linear programming
    LP_TOLERANCE: float = 1e-9
    LP_MAX_ITERATIONS: int = 10000
    MEMBERSHIP_TOLERANCE: float = 1e-8

    # Semidefinite programming
    SDP_MAX_ITERATIONS: int = 200
    SDP_FEASIBILITY_TOLERANCE: float = 1e-8
    SDP_GAP_TOLERANCE: float = 1e-8
    SDP_REDUCED_TOLERANCE: float = 1e-6  # accepted when the solver stalls short of the targets above
    CERTIFICATE_MARGIN: float = 1e-8
    NONLOCALITY_TOLERANCE: float = 1e-6
    CERTIFICATE_RESIDUAL: float = 1e-6

    # Boundary scans
    DEFAULT_RAYS: int = 360
    DEFAULT_THREADS: int = 0  # 0 = machine parallelism

    class Config:
        env_file = ".env"
        case_sensitive = True


settings = Settings()


def reset_to_defaults(target: Settings) -> Settings:
    """Reset `target` in place to the field defaults, ignoring the environment and .env."""
    for name, value in Settings.model_construct():
        setattr(target, name, value)
    return target
