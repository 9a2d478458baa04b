"""Term and document vectors.

Terms are represented by composing character n-gram features (range 3..5 over
the boundary-wrapped surface, plus the whole wrapped surface), so shortenings
like "Temp.Schwank." land near their full forms. The hashed provider derives
every feature vector deterministically from (seed, feature hash, component):

    h      = FNV-1a 64 of the feature's UTF-8 bytes
             (offset 0xCBF29CE484222325, prime 0x100000001B3)
    base   = mix64(h XOR mix64(seed))
    comp_j = mix64(base + (j+1) * 0x9E3779B97F4A7C15)  for j in 0..dim-1
    value  = (comp_j >> 11) * 2^-53 * 2 - 1            in [-1, 1)

mix64 is the splitmix64 finalizer (shift-xor 30/27/31, multipliers
0xBF58476D1CE4E5B9 and 0x94D049BB133111EB), all arithmetic mod 2^64.
These constants are the interchange contract: any reimplementation that
follows them reproduces the vectors bit-exactly.

Document vectors are TF-IDF weighted means of term vectors; query vectors are
plain means. That asymmetry is intentional.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1

_MIX_MULT_1 = 0xBF58476D1CE4E5B9
_MIX_MULT_2 = 0x94D049BB133111EB


def fnv1a_64(data: bytes) -> int:
    h = FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit value."""
    x &= _MASK64
    x ^= x >> 30
    x = (x * _MIX_MULT_1) & _MASK64
    x ^= x >> 27
    x = (x * _MIX_MULT_2) & _MASK64
    x ^= x >> 31
    return x


def _mix64_array(x: np.ndarray) -> np.ndarray:
    # uint64 array ops wrap mod 2^64 silently; scalar np.uint64 ops would warn
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= np.uint64(_MIX_MULT_1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_MIX_MULT_2)
    x ^= x >> np.uint64(31)
    return x


def char_ngrams(term: str, n_min: int = 3, n_max: int = 5) -> list[str]:
    """Boundary-wrapped char n-grams plus the whole wrapped surface.

    "auf" -> <au auf uf> <auf auf> <auf> plus the extra full feature <auf>.
    """
    if not term:
        raise ValueError("term must be non-empty")
    if not (1 <= n_min <= n_max):
        raise ValueError("need 1 <= n_min <= n_max")
    wrapped = f"<{term}>"
    grams = []
    for n in range(n_min, n_max + 1):
        for i in range(len(wrapped) - n + 1):
            grams.append(wrapped[i : i + n])
    grams.append(wrapped)
    return grams


class EmbeddingProvider(Protocol):
    """Deterministic term-to-vector source.

    Vectors are float32, either unit length (1e-6) or all zeros; the
    fingerprint pins provider identity plus parameters so indexes can refuse
    mismatched providers.
    """

    @property
    def dim(self) -> int: ...

    @property
    def fingerprint(self) -> str: ...

    @property
    def spec(self) -> dict: ...

    def term_vector(self, term: str) -> np.ndarray: ...


def _normalized32(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return np.zeros(vec.shape[0], dtype=np.float32)
    return (vec / norm).astype(np.float32)


class HashedNgramProvider:
    """Pure-function embedding provider, bit-exact for a fixed (seed, dim)."""

    def __init__(self, seed: int, dim: int, n_min: int = 3, n_max: int = 5) -> None:
        if dim < 8:
            raise ValueError("dim must be >= 8")
        if not (1 <= n_min <= n_max):
            raise ValueError("need 1 <= n_min <= n_max")
        self._seed = int(seed)
        self._dim = int(dim)
        self._n_min = n_min
        self._n_max = n_max
        self._seed_mix = mix64(self._seed & _MASK64)
        self._offsets = np.arange(1, dim + 1, dtype=np.uint64) * np.uint64(GOLDEN_GAMMA)
        self._feature_cache: dict[str, np.ndarray] = {}
        self._term_cache: dict[str, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def fingerprint(self) -> str:
        ident = (
            f"hashed-ngram/1 seed={self._seed} dim={self._dim} "
            f"ngrams={self._n_min}-{self._n_max} fnv1a64+splitmix64"
        )
        return hashlib.sha256(ident.encode("utf-8")).hexdigest()

    @property
    def spec(self) -> dict:
        return {
            "type": "hashed-ngram",
            "seed": self._seed,
            "dim": self._dim,
            "n_min": self._n_min,
            "n_max": self._n_max,
        }

    def _feature_vector(self, feature: str) -> np.ndarray:
        cached = self._feature_cache.get(feature)
        if cached is not None:
            return cached
        base = mix64(fnv1a_64(feature.encode("utf-8")) ^ self._seed_mix)
        states = np.uint64(base) + self._offsets
        mixed = _mix64_array(states)
        vec = (mixed >> np.uint64(11)).astype(np.float64) * 2.0**-53 * 2.0 - 1.0
        self._feature_cache[feature] = vec
        return vec

    def term_vector(self, term: str) -> np.ndarray:
        cached = self._term_cache.get(term)
        if cached is not None:
            return cached
        features = char_ngrams(term, self._n_min, self._n_max)
        acc = np.zeros(self._dim, dtype=np.float64)
        for feature in features:
            acc += self._feature_vector(feature)
        vec = _normalized32(acc / len(features))
        self._term_cache[term] = vec
        return vec


class FileVectorProvider:
    """Word vectors from a text file ("count dim" header, one term per row).

    Stored vectors are L2-normalized on load. Out-of-vocabulary terms fall
    back to a HashedNgramProvider with fallback_seed and the file's dim, so
    the file needs dim >= 8. Later duplicate rows overwrite earlier ones.
    """

    def __init__(self, path: str | Path, fallback_seed: int) -> None:
        path = Path(path)
        raw = path.read_bytes()
        lines = raw.decode("utf-8").splitlines()
        if not lines:
            raise ValueError("empty vector file")
        header = lines[0].split()
        if len(header) != 2:
            raise ValueError(f"malformed header {lines[0]!r}; expected 'count dim'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ValueError(f"malformed header {lines[0]!r}; expected 'count dim'") from None
        if dim < 8:
            raise ValueError("dim must be >= 8")
        vectors: dict[str, np.ndarray] = {}
        rows = 0
        for lineno, line in enumerate(lines[1:], 2):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != dim + 1:
                raise ValueError(f"row {lineno}: expected {dim + 1} fields, got {len(fields)}")
            try:
                components = np.array([float(x) for x in fields[1:]], dtype=np.float64)
            except ValueError:
                raise ValueError(f"row {lineno}: non-numeric component") from None
            if not np.all(np.isfinite(components)):
                raise ValueError(f"row {lineno}: non-finite component")
            vectors[fields[0]] = _normalized32(components)
            rows += 1
        if rows != count:
            raise ValueError(f"expected {count} rows, found {rows}")
        self._vectors = vectors
        self._dim = dim
        self._fallback = HashedNgramProvider(fallback_seed, dim)
        self._fallback_seed = int(fallback_seed)
        digest = hashlib.sha256()
        digest.update(raw)
        digest.update(f"|fallback={self._fallback_seed}".encode("utf-8"))
        self._fingerprint = digest.hexdigest()
        self._path = str(path)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def fingerprint(self) -> str:
        return self._fingerprint

    @property
    def spec(self) -> dict:
        return {
            "type": "file",
            "path": self._path,
            "fallback_seed": self._fallback_seed,
        }

    def term_vector(self, term: str) -> np.ndarray:
        vec = self._vectors.get(term)
        if vec is not None:
            return vec
        return self._fallback.term_vector(term)


def provider_from_spec(spec: Mapping) -> EmbeddingProvider:
    """Rebuild a provider from its manifest spec."""
    kind = spec.get("type")
    if kind == "hashed-ngram":
        return HashedNgramProvider(
            int(spec["seed"]), int(spec["dim"]),
            int(spec.get("n_min", 3)), int(spec.get("n_max", 5)),
        )
    if kind == "file":
        return FileVectorProvider(spec["path"], int(spec["fallback_seed"]))
    raise ValueError(f"unknown provider type {kind!r}")


def embed_query(terms: Sequence[str], provider: EmbeddingProvider) -> np.ndarray:
    """Unweighted mean of term vectors, L2-normalized; empty input -> zeros."""
    if not terms:
        return np.zeros(provider.dim, dtype=np.float32)
    acc = np.zeros(provider.dim, dtype=np.float64)
    for term in terms:
        acc += provider.term_vector(term).astype(np.float64)
    return _normalized32(acc / len(terms))


def embed_document(
    term_counts: Mapping[str, int],
    idf: Mapping[str, float],
    provider: EmbeddingProvider,
) -> np.ndarray:
    """TF-IDF weighted mean of term vectors, L2-normalized.

    Accumulates in float64 over lexicographic term order so the result is
    independent of input order; stores float32. Zero total weight -> zeros.
    """
    acc = np.zeros(provider.dim, dtype=np.float64)
    mass = 0.0
    for term in sorted(term_counts):
        weight = term_counts[term] * idf[term]
        if weight < 0:
            raise ValueError(f"negative weight for term {term!r}")
        if weight == 0:
            continue
        acc += weight * provider.term_vector(term).astype(np.float64)
        mass += weight
    if mass == 0.0:
        return np.zeros(provider.dim, dtype=np.float32)
    return _normalized32(acc / mass)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """float64 dot of two stored (unit or zero) vectors, clamped to [-1, 1]."""
    value = float(np.dot(a.astype(np.float64), b.astype(np.float64)))
    return max(-1.0, min(1.0, value))
