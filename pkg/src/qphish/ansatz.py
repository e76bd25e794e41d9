"""Registry of 19 standard benchmark parameterised circuits, plus layering.

Layouts live in ``ansatz_registry.json`` next to this module. Each template is
a list of blocks applied in order; a layered circuit repeats the block list,
with layer ``L`` (1-based) owning parameter slots
``[(L-1)*per_layer, L*per_layer)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Callable

from .errors import ConfigurationError, RegistryError
from .qsim import PARAMETRIC, CircuitSpec, Gate


def _chain(n):
    return [(i + 1, i) for i in range(n - 2, -1, -1)]


def _closed_chain(n):
    pairs = _chain(n)
    if n > 2:
        pairs.append((n - 1, 0))
    return pairs


def _even_pairs(n):
    return [(i + 1, i) for i in range(0, n - 1, 2)]


def _odd_pairs(n):
    return [(i + 1, i) for i in range(1, n - 1, 2)]


def _ring(n):
    if n < 2:
        return []
    return [(i, (i + 1) % n) for i in range(n - 1, -1, -1)]


def _ring_reverse(n):
    if n < 2:
        return []
    out = []
    for k in range(n):
        c = (n - 1 + k) % n
        out.append((c, (c - 1) % n))
    return out


def _all_to_all(n):
    return [(c, t) for c in range(n - 1, -1, -1) for t in range(n - 1, -1, -1) if t != c]


PATTERNS: dict[str, Callable[[int], list[tuple[int, int]]]] = {
    "chain": _chain,
    "closed_chain": _closed_chain,
    "even_pairs": _even_pairs,
    "odd_pairs": _odd_pairs,
    "ring": _ring,
    "ring_reverse": _ring_reverse,
    "all_to_all": _all_to_all,
}

SUBSETS = {
    "all": lambda n: list(range(n)),
    "middle": lambda n: list(range(1, n - 1)),
}


@lru_cache(maxsize=None)
def load_registry() -> dict[int, tuple]:
    text = resources.files(__package__).joinpath("ansatz_registry.json").read_text()
    raw = json.loads(text)
    registry = {}
    for key, blocks in raw.items():
        if key.startswith("_"):
            continue
        for block in blocks:
            _check_block(key, block)
        registry[int(key)] = tuple(tuple(sorted(b.items())) for b in blocks)
    return registry


def _check_block(key, block):
    if "rot" in block:
        if block["rot"] not in PARAMETRIC or block.get("on") not in SUBSETS:
            raise RegistryError(f"template {key}: bad rotation block {block}")
    elif "gate" in block:
        if block["gate"] in PARAMETRIC or block.get("on") not in SUBSETS:
            raise RegistryError(f"template {key}: bad fixed-gate block {block}")
    elif "ent" in block:
        if block.get("pattern") not in PATTERNS:
            raise RegistryError(f"template {key}: bad entangling block {block}")
    else:
        raise RegistryError(f"template {key}: unknown block {block}")


def template_ids() -> list[int]:
    return sorted(load_registry())


def _layer_gates(blocks, n_qubits, offset):
    gates = []
    slot = offset
    for items in blocks:
        block = dict(items)
        if "rot" in block:
            for q in SUBSETS[block["on"]](n_qubits):
                gates.append(Gate(block["rot"], (q,), param=slot))
                slot += 1
        elif "gate" in block:
            gates += [Gate(block["gate"], (q,)) for q in SUBSETS[block["on"]](n_qubits)]
        else:
            kind = block["ent"]
            for c, t in PATTERNS[block["pattern"]](n_qubits):
                if kind in PARAMETRIC:
                    gates.append(Gate(kind, (c, t), param=slot))
                    slot += 1
                else:
                    gates.append(Gate(kind, (c, t)))
    return gates, slot - offset


def params_per_layer(template_id: int, n_qubits: int) -> int:
    blocks = _blocks(template_id)
    return _layer_gates(blocks, n_qubits, 0)[1]


def _blocks(template_id):
    registry = load_registry()
    if template_id not in registry:
        raise RegistryError(f"unknown ansatz id {template_id}; registry holds {min(registry)}..{max(registry)}")
    return registry[template_id]


def build_ansatz(template_id: int, n_qubits: int, layers: int = 1) -> CircuitSpec:
    blocks = _blocks(template_id)
    if n_qubits < 1:
        raise ConfigurationError("ansatz templates need at least one qubit")
    if layers < 1:
        raise ConfigurationError("layers must be positive")
    gates = []
    offset = 0
    for _ in range(layers):
        layer, used = _layer_gates(blocks, n_qubits, offset)
        gates += layer
        offset += used
    return CircuitSpec(n_qubits, gates, offset)


def count_entangling_gates(circuit: CircuitSpec) -> int:
    return sum(g.entangling for g in circuit.gates)


@dataclass(frozen=True)
class AnsatzTemplate:
    id: int

    def build(self, n_qubits: int, layers: int = 1) -> CircuitSpec:
        return build_ansatz(self.id, n_qubits, layers)

    def params_per_layer(self, n_qubits: int) -> int:
        return params_per_layer(self.id, n_qubits)
