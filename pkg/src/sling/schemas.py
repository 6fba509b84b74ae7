"""JSON Schemas for everything the ``sling`` command prints on stdout."""

_NUM = {"type": "number"}
_INT = {"type": "integer", "minimum": 0}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}

SLING_BUILD = {
    "type": "object",
    "required": ["kind", "baseline", "out", "n", "total_entries", "entry_bytes", "file_bytes",
                 "mean_entries", "max_entries", "entries_cap", "entry_histogram",
                 "reduced_fraction", "marked_total", "marked_max", "params", "seed",
                 "fingerprint", "build_seconds"],
    "properties": {
        "kind": {"const": "build"},
        "baseline": {"const": "sling"},
        "out": {"type": "string"},
        "n": _INT,
        "total_entries": _INT,
        "entry_bytes": _INT,
        "file_bytes": _INT,
        "mean_entries": _NUM,
        "max_entries": _INT,
        "entries_cap": _NUM,
        "entry_histogram": {"type": "object", "additionalProperties": _INT},
        "reduced_fraction": _PROB,
        "marked_total": _INT,
        "marked_max": _INT,
        "params": {
            "type": "object",
            "required": ["eps", "delta", "c", "eps_d", "theta", "delta_d", "gamma", "mode"],
            "properties": {"mode": {"enum": ["basic", "adaptive"]}},
        },
        "seed": _INT,
        "fingerprint": {"type": "string", "pattern": "^[0-9a-f]{16}$"},
        "build_seconds": _NUM,
    },
}

MC_BUILD = {
    "type": "object",
    "required": ["kind", "baseline", "out", "n", "t", "n_w", "file_bytes", "seed", "fingerprint",
                 "build_seconds"],
    "properties": {
        "kind": {"const": "build"},
        "baseline": {"const": "mc"},
        "out": {"type": "string"},
        "n": _INT,
        "t": _INT,
        "n_w": _INT,
        "file_bytes": _INT,
        "seed": _INT,
        "fingerprint": {"type": "string", "pattern": "^[0-9a-f]{16}$"},
        "build_seconds": _NUM,
    },
}

BUILD = {"oneOf": [SLING_BUILD, MC_BUILD]}

PAIR = {
    "type": "object",
    "required": ["kind", "u", "v", "score"],
    "properties": {
        "kind": {"const": "pair"},
        "u": {"type": "integer"},
        "v": {"type": "integer"},
        "score": _PROB,
    },
}

# one object per line, highest score first
SOURCE_ROW = {
    "type": "object",
    "required": ["source", "node", "score"],
    "properties": {
        "source": {"type": "integer"},
        "node": {"type": "integer"},
        "score": _PROB,
    },
}

EVAL = {
    "type": "object",
    "required": ["method", "max_error", "run_max_errors", "group_errors", "group_counts",
                 "topk_precision", "pair_count", "runtimes", "config"],
    "properties": {
        "method": {"enum": ["sling", "mc"]},
        "max_error": {"type": "number", "minimum": 0},
        "run_max_errors": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "group_errors": {
            "type": "object",
            "required": ["[0.1,1]", "[0.01,0.1)", "[0,0.01)"],
            "additionalProperties": {"type": "number", "minimum": 0},
        },
        "group_counts": {
            "type": "object",
            "required": ["[0.1,1]", "[0.01,0.1)", "[0,0.01)"],
            "additionalProperties": _INT,
        },
        "topk_precision": {"type": "object", "additionalProperties": _PROB},
        "pair_count": _INT,
        "runtimes": {"type": "object", "additionalProperties": _NUM},
        "config": {"type": "object"},
    },
}

BENCH = {
    "type": "object",
    "required": ["kind", "mode", "queries", "warmup", "seed", "sampling", "mean_seconds",
                 "median_seconds", "p95_seconds", "total_seconds", "from_disk"],
    "properties": {
        "kind": {"const": "bench"},
        "mode": {"enum": ["pair", "source", "source-naive"]},
        "queries": _INT,
        "warmup": _INT,
        "seed": _INT,
        "sampling": {"enum": ["uniform", "degree"]},
        "mean_seconds": _NUM,
        "median_seconds": _NUM,
        "p95_seconds": _NUM,
        "total_seconds": _NUM,
        "from_disk": {"type": "boolean"},
        "csv": {"type": ["string", "null"]},
    },
}

ERROR = {
    "type": "object",
    "required": ["error", "message", "exit_code"],
    "properties": {
        "error": {"type": "string"},
        "message": {"type": "string"},
        "exit_code": {"enum": [1, 2, 3]},
    },
}
