"""Tests for environment-driven settings."""
import pytest
from pydantic import ValidationError

from app.settings import get_settings, reset_settings


@pytest.fixture(autouse=True)
def fresh_settings():
    reset_settings()
    yield
    reset_settings()


def test_defaults(monkeypatch):
    """Without overrides the numerical defaults apply."""
    for name in ("SSHOPM_RESIDUAL_GATE", "SSHOPM_WORKERS", "SSHOPM_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    settings = get_settings()
    assert settings.residual_gate == 1e-6
    assert settings.workers == 1
    assert settings.log_level == "WARNING"


def test_environment_overrides(monkeypatch):
    """SSHOPM_* variables replace the defaults after a reset."""
    monkeypatch.setenv("SSHOPM_WORKERS", "4")
    monkeypatch.setenv("SSHOPM_LOG_LEVEL", "debug")
    settings = get_settings()
    assert settings.workers == 4
    assert settings.log_level == "DEBUG"


def test_settings_are_cached(monkeypatch):
    """Changes after the first read need reset_settings."""
    monkeypatch.delenv("SSHOPM_WORKERS", raising=False)
    first = get_settings()
    monkeypatch.setenv("SSHOPM_WORKERS", "3")
    assert get_settings() is first
    reset_settings()
    assert get_settings().workers == 3


def test_invalid_value(monkeypatch):
    """A zero worker count is rejected."""
    monkeypatch.setenv("SSHOPM_WORKERS", "0")
    with pytest.raises(ValidationError):
        get_settings()
