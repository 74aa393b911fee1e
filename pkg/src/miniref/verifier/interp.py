"""Concrete small-step interpreter built on the shared rule catalog."""

from __future__ import annotations

from dataclasses import dataclass

from .. import tree as t
from .config import Config, SymDefs, SymEnv, is_value
from .rules import step_config


@dataclass(frozen=True)
class Value:
    term: t.Expr


@dataclass(frozen=True)
class Stuck:
    config: Config


@dataclass(frozen=True)
class Cutoff:
    config: Config


def interpret(code: t.Expr, env=None, defs=None, fuel: int = 5000):
    """Run `code` to a value, a stuck state, or a fuel cutoff."""
    if env is None:
        env = SymEnv((), None)
    elif isinstance(env, dict):
        env = SymEnv(tuple(env.items()), None)
    if defs is None:
        defs = SymDefs((), None)
    elif isinstance(defs, t.SourceModule):
        defs = SymDefs.of_module(defs)
    cfg = Config(code, env, defs)
    for _ in range(fuel):
        if is_value(cfg.code):
            return Value(cfg.code)
        step = step_config(cfg, ())
        if step is None:
            return Stuck(cfg)
        if len(step.branches) != 1:
            return Stuck(cfg)  # a concrete step never forks
        code2, env2, _ = step.branches[0]
        cfg = Config(code2, env2, cfg.defs)
    return Cutoff(cfg)
