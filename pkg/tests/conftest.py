from __future__ import annotations

import pytest

from eulimit.rule_cache import reset_rule_cache


@pytest.fixture(autouse=True)
def fresh_rule_cache():
    reset_rule_cache()
    yield
    reset_rule_cache()


@pytest.fixture
def out_env(tmp_path, monkeypatch):
    """Point EULIMIT_OUT at a scratch directory."""
    target = tmp_path / "env_out"
    monkeypatch.setenv("EULIMIT_OUT", str(target))
    return target
