"""Token-level Shapley attributions for one prediction.

Short sentences are attributed by full coalition enumeration; longer ones by
the kernel-weighted least-squares approximation with stratified coalition
sampling. Tokens are the whitespace tokens of the target sentence only;
masking removes tokens (the bag-of-features backend has no placeholder
semantics, so removal equals zeroing the token's features).
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb, factorial
from typing import Callable, Iterable, Sequence

import numpy as np

from .backends import Backend, NativeBackend
from .corpus import ContextWindow
from .criteria import Criterion
from .errors import SingularSystem, TooManyTokens

EXACT_TOKEN_LIMIT = 12
DEFAULT_SAMPLE_BUDGET = 4096


@dataclass(frozen=True)
class TokenAttribution:
    tokens: tuple[str, ...]
    phi: tuple[float, ...]
    base_value: float
    method: str  # "Exact" | "Kernel"
    samples_used: int | None = None

    def total(self) -> float:
        return sum(self.phi)


def mask_tokens(tokens: Sequence[str], coalition: Iterable[int]) -> str:
    """Rebuild the sentence from the tokens in the coalition, document order."""
    keep = set(coalition)
    return " ".join(tok for i, tok in enumerate(tokens) if i in keep)


def shapley_kernel_weight(m: int, s: int) -> float:
    """Kernel weight for a coalition of size s out of m tokens.

    Defined only for interior sizes; the empty and full coalitions enter the
    regression as equality constraints, not weighted rows.
    """
    if m < 2:
        raise ValueError("kernel weight needs at least 2 tokens")
    if s <= 0 or s >= m:
        raise ValueError(f"coalition size {s} of {m} has no kernel weight")
    return (m - 1) / (comb(m, s) * s * (m - s))


class ValueFunction:
    """Caching value function: coalition of token indices -> model output.

    Rebuilds the target sentence from the coalition tokens (context held
    fixed) and queries the backend. Evaluations are memoized by bitmask;
    v(empty) and v(full) are cached eagerly.
    """

    def __init__(
        self,
        backend: Backend,
        criterion: Criterion,
        tokens: Sequence[str],
        context: ContextWindow | None = None,
        output: str = "probability",
        max_concurrency: int = 1,
    ):
        if output not in ("probability", "margin"):
            raise ValueError("output must be 'probability' or 'margin'")
        if output == "margin" and not isinstance(backend, NativeBackend):
            raise ValueError("margin output requires the native backend")
        self.backend = backend
        self.criterion = criterion
        self.tokens = tuple(tokens)
        self.context = context
        self.output = output
        self.max_concurrency = max_concurrency
        self._cache: dict[int, float] = {}
        if isinstance(backend, NativeBackend):
            self._prepare_native_fast_path(backend)
        self.v_empty = self(())
        self.v_full = self(range(len(self.tokens)))

    def _prepare_native_fast_path(self, backend: NativeBackend) -> None:
        """Precompute hashed indices and the fixed context score.

        Equivalent to featurizing the rebuilt sentence each time: coalition
        token counts get sublinear tf and land on the same hashed indices.
        """
        from math import log

        from .features import context_text, featurize, stable_hash

        model = backend.model
        half = model.dimension // 2
        head = model.weights[self.criterion]
        self._token_lower = [tok.lower() for tok in self.tokens]
        self._weight_by_token = {
            tok: float(head[stable_hash(tok) % half]) for tok in set(self._token_lower)
        }
        before = self.context.before_text if self.context else ""
        after = self.context.after_text if self.context else ""
        ctx_features = featurize("", context_text(before, after), model.dimension)
        self._fixed_score = model.biases[self.criterion] + sum(
            head[i] * v for i, v in ctx_features.items()
        )
        self._log = log

    def _mask_of(self, coalition: Iterable[int]) -> int:
        mask = 0
        for i in coalition:
            mask |= 1 << i
        return mask

    def _native_score(self, mask: int) -> float:
        counts: dict[str, int] = {}
        for i, token in enumerate(self._token_lower):
            if mask >> i & 1:
                counts[token] = counts.get(token, 0) + 1
        score = self._fixed_score
        for token, count in counts.items():
            score += self._weight_by_token[token] * (1.0 + self._log(count))
        return score

    def _evaluate(self, mask: int) -> float:
        if isinstance(self.backend, NativeBackend):
            score = self._native_score(mask)
            if self.output == "margin":
                return score
            from .model import _sigmoid

            return _sigmoid(score)
        coalition = [i for i in range(len(self.tokens)) if mask >> i & 1]
        text = mask_tokens(self.tokens, coalition)
        if self.output == "margin":
            return self.backend.raw_score(text, self.context, self.criterion)  # type: ignore[union-attr]
        return self.backend.probability(text, self.context, self.criterion)

    def __call__(self, coalition: Iterable[int]) -> float:
        mask = self._mask_of(coalition)
        if mask not in self._cache:
            self._cache[mask] = self._evaluate(mask)
        return self._cache[mask]

    def evaluate_masks(self, masks: Sequence[int]) -> list[float]:
        """Evaluate many coalitions, with bounded fan-out for remote backends."""
        todo = [m for m in dict.fromkeys(masks) if m not in self._cache]
        if todo:
            if self.max_concurrency > 1 and not isinstance(self.backend, NativeBackend):
                with ThreadPoolExecutor(max_workers=self.max_concurrency) as pool:
                    for mask, value in zip(todo, pool.map(self._evaluate, todo)):
                        self._cache[mask] = value
            else:
                for mask in todo:
                    self._cache[mask] = self._evaluate(mask)
        return [self._cache[m] for m in masks]


TableValueFunction = Callable[[Iterable[int]], float]


def exact_shapley(
    v: ValueFunction | TableValueFunction,
    tokens: Sequence[str],
    exact_limit: int = EXACT_TOKEN_LIMIT,
) -> TokenAttribution:
    """Exact Shapley values by full 2^M coalition enumeration.

    phi_i = sum over S not containing i of |S|!(M-|S|-1)!/M! * (v(S+i) - v(S)).
    """
    m = len(tokens)
    if m == 0:
        raise ValueError("no tokens to attribute")
    if m > exact_limit:
        raise TooManyTokens(m, exact_limit)

    values = np.empty(1 << m)
    for mask in range(1 << m):
        values[mask] = v([i for i in range(m) if mask >> i & 1])

    size_weight = [factorial(s) * factorial(m - s - 1) / factorial(m) for s in range(m)]
    popcount = np.array([bin(mask).count("1") for mask in range(1 << m)])

    phi = []
    for i in range(m):
        bit = 1 << i
        without = np.array([mask for mask in range(1 << m) if not mask & bit])
        gains = values[without | bit] - values[without]
        weights = np.array([size_weight[s] for s in popcount[without]])
        phi.append(float(weights @ gains))

    return TokenAttribution(
        tokens=tuple(tokens),
        phi=tuple(phi),
        base_value=float(values[0]),
        method="Exact",
    )


def _stratified_masks(m: int, budget: int, rng: np.random.Generator) -> tuple[list[int], list[float]]:
    """Sample interior coalition bitmasks stratified by size.

    Sizes receive samples proportional to their total kernel mass
    (weight(m,s) * C(m,s)); each sampled coalition is paired with its
    complement. Fully enumerated sizes carry the raw kernel weight; sampled
    sizes spread the size's mass over the coalitions drawn from it.
    """
    mass = {s: (m - 1) / (s * (m - s)) for s in range(1, m)}
    total_mass = sum(mass.values())
    alloc = {s: max(2, int(round(budget * mass[s] / total_mass))) for s in range(1, m)}

    masks: list[int] = []
    weights: list[float] = []
    full = (1 << m) - 1
    for s in range(1, m // 2 + 1):
        t = m - s
        pair_alloc = alloc[s] + (alloc[t] if t != s else 0)
        count = comb(m, s)
        if (count * (2 if t != s else 1)) <= pair_alloc:
            # enumerate the whole size (and its complement size)
            for mask in _masks_of_size(m, s):
                masks.append(mask)
                weights.append(shapley_kernel_weight(m, s))
                if t != s:
                    masks.append(full ^ mask)
                    weights.append(shapley_kernel_weight(m, t))
        else:
            draws = max(2, pair_alloc // (2 if t != s else 1))
            seen: set[int] = set()
            attempts = 0
            while len(seen) < min(draws, count) and attempts < 20 * draws:
                attempts += 1
                members = rng.choice(m, size=s, replace=False)
                mask = 0
                for i in members:
                    mask |= 1 << int(i)
                seen.add(mask)
                if t == s:
                    seen.add(full ^ mask)  # complement has the same size
            per_mask_s = mass[s] / len(seen)
            per_mask_t = (mass[t] / len(seen)) if t != s else None
            for mask in sorted(seen):
                masks.append(mask)
                weights.append(per_mask_s)
                if per_mask_t is not None:
                    masks.append(full ^ mask)
                    weights.append(per_mask_t)
    return masks, weights


def _masks_of_size(m: int, s: int) -> list[int]:
    from itertools import combinations

    out = []
    for members in combinations(range(m), s):
        mask = 0
        for i in members:
            mask |= 1 << i
        out.append(mask)
    return out


def kernel_shap(
    v: ValueFunction | TableValueFunction,
    tokens: Sequence[str],
    sample_budget: int = DEFAULT_SAMPLE_BUDGET,
    seed: int = 0,
) -> TokenAttribution:
    """Kernel-weighted least-squares Shapley approximation.

    Solves for phi over sampled interior coalitions under the two equality
    constraints g(empty) = v(empty) and g(full) = v(full); the full-coalition
    constraint eliminates the last unknown. With every interior coalition
    included (2^M - 2 <= budget) the result matches exact enumeration.
    """
    m = len(tokens)
    if m < 2:
        raise ValueError("kernel SHAP needs at least 2 tokens")
    if sample_budget < 2 * m:
        raise ValueError(f"sample budget {sample_budget} < 2M = {2 * m}")

    interior = (1 << m) - 2
    if interior <= sample_budget:
        masks = list(range(1, (1 << m) - 1))
        weights = [shapley_kernel_weight(m, bin(mask).count("1")) for mask in masks]
    else:
        rng = np.random.default_rng(seed)
        masks, weights = _stratified_masks(m, sample_budget, rng)

    if isinstance(v, ValueFunction):
        values = np.array(v.evaluate_masks(masks))
        v_empty = v.v_empty
        v_full = v.v_full
    else:
        values = np.array([v([i for i in range(m) if mask >> i & 1]) for mask in masks])
        v_empty = v([])
        v_full = v(list(range(m)))

    z = np.array([[(mask >> i) & 1 for i in range(m)] for mask in masks], dtype=float)
    w = np.asarray(weights)

    # eliminate phi_{m-1} via the full-coalition constraint
    y = values - v_empty - z[:, -1] * (v_full - v_empty)
    design = z[:, :-1] - z[:, -1:]
    sw = np.sqrt(w)
    solution, _, rank, _ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    if rank < m - 1:
        raise SingularSystem(
            f"sampled design has rank {rank} < {m - 1}; increase the budget "
            "(all interior coalitions are enumerated when 2^M <= budget)"
        )
    phi = list(map(float, solution))
    phi.append(float(v_full - v_empty - sum(phi)))

    return TokenAttribution(
        tokens=tuple(tokens),
        phi=tuple(phi),
        base_value=float(v_empty),
        method="Kernel",
        samples_used=len(masks),
    )


def stable_cell_seed(seed: int, statement_id: str, sentence_index: int, criterion: Criterion) -> int:
    """Per-cell seed so sampling is reproducible regardless of scheduling order."""
    key = f"{seed}:{statement_id}:{sentence_index}:{criterion.value}".encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=4).digest(), "big")


def attribute(
    backend: Backend,
    criterion: Criterion,
    sentence_text: str,
    context: ContextWindow | None = None,
    exact_limit: int = EXACT_TOKEN_LIMIT,
    sample_budget: int = DEFAULT_SAMPLE_BUDGET,
    seed: int = 0,
    max_concurrency: int = 1,
) -> TokenAttribution:
    """Attribute one prediction: exact enumeration up to the limit, kernel beyond."""
    tokens = sentence_text.split()
    if not tokens:
        raise ValueError("sentence has no tokens")
    v = ValueFunction(backend, criterion, tokens, context, max_concurrency=max_concurrency)
    if len(tokens) <= exact_limit:
        return exact_shapley(v, tokens, exact_limit=exact_limit)
    return kernel_shap(v, tokens, sample_budget=sample_budget, seed=seed)
