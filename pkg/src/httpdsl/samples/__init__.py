"""Description files shipped with the package."""

from importlib import resources

NAMES = ("weather_location", "weatherapp", "users", "rest", "full_example")


def source(name: str) -> str:
    """Return the text of a bundled ``<name>.http`` file."""
    return resources.files(__name__).joinpath(f"{name}.http").read_text("utf-8")


def path(name: str):
    return resources.files(__name__).joinpath(f"{name}.http")
