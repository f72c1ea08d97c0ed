import logging

from dotenv import load_dotenv

from app.cqregion.config import Settings, load_settings

__version__ = "0.1.0"


def load_runtime() -> Settings:
    """Load `.env`, read settings and configure root logging once."""
    load_dotenv()
    settings = load_settings()
    logging.basicConfig(
        level=getattr(logging, settings.log_level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logging.getLogger(__name__).info("load_runtime() complete; threads=%s", settings.threads or "auto")
    return settings
