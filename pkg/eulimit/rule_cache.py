"""
Rule Cache for Gauss-Jacobi quadrature

This module provides a lightweight in-memory store of symmetric Gauss-Jacobi
rules keyed by (node count, exponent) so that repeated entropy evaluations
at the same theta reuse nodes and log-weights instead of recomputing the
eigenvalue problem behind ``scipy.special.roots_jacobi``.
"""

import logging
import threading
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.special import roots_jacobi

from eulimit.errors import DomainError

logger = logging.getLogger(__name__)

RuleKey = Tuple[int, float]
Rule = Tuple[np.ndarray, np.ndarray]


class JacobiRuleCache:
    """
    Thread-safe mapping from (n, lam) to a normalized Gauss-Jacobi rule.

    The stored rule integrates against (1 - tau^2)^lam on [-1, 1] with
    weights normalized to a probability measure and kept as logarithms.
    Arrays handed out are read-only.
    """

    def __init__(self):
        self._rules: Dict[RuleKey, Rule] = {}
        self._lock = threading.Lock()

    def get_rule(self, node_count: int, lam: float) -> Rule:
        """
        Get or build the normalized rule.

        Args:
            node_count: Number of Gauss nodes
            lam: Exponent of the symmetric weight (1 - tau^2)^lam

        Returns:
            Tuple of (nodes, log_weights) with logsumexp(log_weights) == 0
        """
        key = (int(node_count), float(lam))

        with self._lock:
            if key in self._rules:
                return self._rules[key]

        rule = self._build_rule(*key)

        with self._lock:
            # another thread may have stored the same rule meanwhile
            return self._rules.setdefault(key, rule)

    def _build_rule(self, node_count: int, lam: float) -> Rule:
        if node_count < 1:
            raise DomainError(f"node count must be positive, got {node_count}")
        if lam <= -1.0:
            raise DomainError(f"Jacobi exponent must exceed -1, got {lam}")
        nodes, weights = roots_jacobi(node_count, lam, lam)
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
            raise DomainError(
                f"Gauss-Jacobi weights overflow for n={node_count}, lam={lam:.6g}; "
                "use the Gaussian-limit rule"
            )
        log_weights = np.log(weights) - np.log(np.sum(weights))
        nodes.setflags(write=False)
        log_weights.setflags(write=False)
        logger.debug("built Gauss-Jacobi rule n=%d lam=%.6g", node_count, lam)
        return nodes, log_weights

    def size(self) -> int:
        with self._lock:
            return len(self._rules)

    def clear_all(self):
        """Clear all cached rules."""
        with self._lock:
            self._rules.clear()


# Global singleton instance for the process
_rule_cache_instance: Optional[JacobiRuleCache] = None
_instance_lock = threading.Lock()


def get_rule_cache() -> JacobiRuleCache:
    """
    Get the global JacobiRuleCache instance (singleton pattern).

    Returns:
        The global JacobiRuleCache instance
    """
    global _rule_cache_instance

    if _rule_cache_instance is None:
        with _instance_lock:
            if _rule_cache_instance is None:
                _rule_cache_instance = JacobiRuleCache()

    return _rule_cache_instance


def reset_rule_cache():
    """Reset the global rule cache (used by tests)."""
    global _rule_cache_instance

    with _instance_lock:
        if _rule_cache_instance is not None:
            _rule_cache_instance.clear_all()
        _rule_cache_instance = None
