"""Seeded LDA by collapsed Gibbs sampling, plus the topic-quality toolkit:
unseeded LDA, information-gain seed construction, Jaccard topic diversity,
relevance-ranked representative words, NPMI coherence, and hyperparameter
selection by coherence.

Seeding works through the word prior: a seed word w of topic k carries
prior mass beta + seed_boost in topic k and plain beta elsewhere, so the
per-token conditional is

    p(z = k) ~ (n_dk + alpha) * (n_kw + prior_kw) / (n_k + sum_w prior_kw).

The sweep kernel is JIT-compiled with numba when available and runs as
plain Python otherwise; both paths execute the same code, so results are
identical either way.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not args or not callable(args[0]) else args[0]

DEFAULT_N_SWEEPS = 500
DEFAULT_SEED_BOOST_FACTOR = 5.0  # seed_boost defaults to 5 * beta
NPMI_EPS = 1e-12
DEFAULT_RELEVANCE_LAMBDA = 0.6
HYPERPARAM_GRID_POINTS = (0.05, 0.1, 0.5, 1.0, 5.0, 10.0)


_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize_caption(text: str) -> list[str]:
    """Lowercase, split on whitespace/punctuation, keep hashtag words.

    The '#' marker is punctuation, so '#giveaway' yields the token
    'giveaway'. No stemming.
    """
    return _WORD_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    tokens: tuple[str, ...]

    def __len__(self):
        return len(self.tokens)

    def encode(self, doc: list[str]) -> np.ndarray:
        """Token ids for the in-vocabulary tokens of a document."""
        idx = self.index
        return np.array([idx[t] for t in doc if t in idx], dtype=np.int64)

    def content_hash(self) -> str:
        return hashlib.sha256("\x00".join(self.tokens).encode()).hexdigest()


def build_vocabulary(docs: list[list[str]], min_count: int = 1) -> Vocabulary:
    """Index tokens with frequency >= min_count, ordered by descending
    frequency with lexicographic tie-break."""
    if not docs:
        raise ValueError("no documents")
    counts: dict[str, int] = {}
    for doc in docs:
        for tok in doc:
            counts[tok] = counts.get(tok, 0) + 1
    kept = sorted((t for t, c in counts.items() if c >= min_count),
                  key=lambda t: (-counts[t], t))
    if not kept:
        raise ValueError(f"empty vocabulary after min_count={min_count} filtering")
    return Vocabulary({t: i for i, t in enumerate(kept)}, tuple(kept))


@dataclass(frozen=True)
class SeedSpec:
    topic_names: tuple[str, ...]
    seeds: dict[str, tuple[str, ...]]

    def __post_init__(self):
        if len(self.topic_names) < 2:
            raise ValueError("need at least 2 topics")
        seen: dict[str, str] = {}
        for name in self.topic_names:
            words = self.seeds.get(name, ())
            if not words:
                raise ValueError(f"topic {name!r} has no seed words")
            for w in words:
                if w in seen:
                    raise ValueError(f"seed word {w!r} assigned to both {seen[w]!r} and {name!r}")
                seen[w] = name

    @classmethod
    def from_dict(cls, mapping: dict[str, list[str]]) -> "SeedSpec":
        return cls(tuple(mapping), {k: tuple(v) for k, v in mapping.items()})


@dataclass
class TopicModelState:
    K: int
    alpha: float
    beta: float
    seed_boost: float
    topic_names: tuple[str, ...]
    vocab: Vocabulary
    doc_tokens: list[np.ndarray]
    z: list[np.ndarray]
    n_dk: np.ndarray  # D x K
    n_kw: np.ndarray  # K x V
    n_k: np.ndarray   # K
    prior_kw: np.ndarray  # K x V word prior (beta + boost on seeds)
    rng_seed: int
    n_sweeps: int

    @property
    def n_docs(self) -> int:
        return len(self.doc_tokens)

    def prior_sums(self) -> np.ndarray:
        return self.prior_kw.sum(axis=1)

    def recount(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Re-derive all count matrices from the raw assignments."""
        n_dk = np.zeros((self.n_docs, self.K), dtype=np.int64)
        n_kw = np.zeros((self.K, len(self.vocab)), dtype=np.int64)
        for d, (words, zs) in enumerate(zip(self.doc_tokens, self.z)):
            for w, k in zip(words, zs):
                n_dk[d, k] += 1
                n_kw[k, w] += 1
        return n_dk, n_kw, n_kw.sum(axis=1)

    def dominant_topics(self) -> np.ndarray:
        return np.argmax(self.n_dk + self.alpha, axis=1)

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "K": self.K,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed_boost": self.seed_boost,
            "topic_names": list(self.topic_names),
            "rng_seed": self.rng_seed,
            "n_sweeps": self.n_sweeps,
            "vocab_hash": self.vocab.content_hash(),
            "vocab_tokens": list(self.vocab.tokens),
            "n_dk": self.n_dk.tolist(),
            "n_kw": self.n_kw.tolist(),
            "prior_kw": self.prior_kw.tolist(),
        }


def state_from_json(data: dict) -> TopicModelState:
    """Rebuild a state usable for posterior queries (not resumable training)."""
    vocab = Vocabulary({t: i for i, t in enumerate(data["vocab_tokens"])},
                       tuple(data["vocab_tokens"]))
    n_kw = np.array(data["n_kw"], dtype=np.int64)
    return TopicModelState(
        K=data["K"], alpha=data["alpha"], beta=data["beta"],
        seed_boost=data["seed_boost"], topic_names=tuple(data["topic_names"]),
        vocab=vocab, doc_tokens=[], z=[],
        n_dk=np.array(data["n_dk"], dtype=np.int64),
        n_kw=n_kw, n_k=n_kw.sum(axis=1),
        prior_kw=np.array(data["prior_kw"], dtype=np.float64),
        rng_seed=data["rng_seed"], n_sweeps=data["n_sweeps"],
    )


@njit(cache=True)
def _gibbs_sweep(doc_ids, word_ids, z, n_dk, n_kw, n_k, alpha, prior_kw, prior_sum, uniforms):
    K = n_kw.shape[0]
    probs = np.empty(K, dtype=np.float64)
    for i in range(word_ids.shape[0]):
        d = doc_ids[i]
        w = word_ids[i]
        k_old = z[i]
        n_dk[d, k_old] -= 1
        n_kw[k_old, w] -= 1
        n_k[k_old] -= 1
        total = 0.0
        for k in range(K):
            p = (n_dk[d, k] + alpha) * (n_kw[k, w] + prior_kw[k, w]) / (n_k[k] + prior_sum[k])
            total += p
            probs[k] = total
        target = uniforms[i] * total
        k_new = 0
        while k_new < K - 1 and probs[k_new] <= target:
            k_new += 1
        z[i] = k_new
        n_dk[d, k_new] += 1
        n_kw[k_new, w] += 1
        n_k[k_new] += 1


def _fit_gibbs(docs, vocab: Vocabulary, topic_names: tuple[str, ...],
               alpha: float, beta: float, seed_boost: float,
               prior_kw: np.ndarray, n_sweeps: int, rng_seed: int,
               sweep_callback) -> TopicModelState:
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    if seed_boost < 0:
        raise ValueError("seed_boost must be >= 0")
    if n_sweeps < 1:
        raise ValueError("n_sweeps must be >= 1")
    K = len(topic_names)
    prior_sum = prior_kw.sum(axis=1)

    doc_tokens = [vocab.encode(doc) for doc in docs]
    doc_ids = (np.concatenate([np.full(len(t), d, dtype=np.int64)
                               for d, t in enumerate(doc_tokens)])
               if doc_tokens else np.empty(0, np.int64))
    word_ids = (np.concatenate(doc_tokens)
                if doc_tokens else np.empty(0, dtype=np.int64)).astype(np.int64)
    n_tokens = word_ids.shape[0]

    rng = np.random.default_rng(np.random.SeedSequence([rng_seed, 0x7091C]))
    z_flat = rng.integers(0, K, size=n_tokens).astype(np.int64)
    if seed_boost > 0 and n_tokens:
        # pin topic identity from the start: seed-word tokens open in their
        # seeded topic (with boost 0 this is a no-op, so the unseeded fit is
        # bit-identical to fit_lda)
        seeded_topic = np.where(prior_kw.max(axis=0) > beta,
                                prior_kw.argmax(axis=0), -1)
        owner = seeded_topic[word_ids]
        z_flat = np.where(owner >= 0, owner, z_flat).astype(np.int64)
    n_dk = np.zeros((len(docs), K), dtype=np.int64)
    n_kw = np.zeros((K, len(vocab)), dtype=np.int64)
    np.add.at(n_dk, (doc_ids, z_flat), 1)
    np.add.at(n_kw, (z_flat, word_ids), 1)
    n_k = n_kw.sum(axis=1)

    state = TopicModelState(
        K=K, alpha=alpha, beta=beta, seed_boost=seed_boost,
        topic_names=topic_names, vocab=vocab,
        doc_tokens=doc_tokens, z=[], n_dk=n_dk, n_kw=n_kw, n_k=n_k,
        prior_kw=prior_kw, rng_seed=rng_seed, n_sweeps=n_sweeps,
    )
    for sweep in range(n_sweeps):
        uniforms = rng.random(n_tokens)
        _gibbs_sweep(doc_ids, word_ids, z_flat, n_dk, n_kw, n_k,
                     alpha, prior_kw, prior_sum, uniforms)
        if sweep_callback is not None:
            state.z = _split_z(z_flat, doc_tokens)
            sweep_callback(state, sweep)
    state.z = _split_z(z_flat, doc_tokens)
    return state


def fit_seeded_lda(docs: list[list[str]], vocab: Vocabulary, spec: SeedSpec,
                   alpha: float, beta: float, seed_boost: float | None = None,
                   n_sweeps: int = DEFAULT_N_SWEEPS, rng_seed: int = 0,
                   sweep_callback=None) -> TopicModelState:
    """Collapsed Gibbs sampling with an asymmetric seed-boosted word prior.

    Seed tokens absent from the vocabulary are dropped with a warning on
    stderr rather than failing the fit. The returned state is the last
    sweep's state (no averaging); identical inputs and rng_seed give
    identical assignments. sweep_callback(state, sweep_index), when given,
    runs after every sweep -- the count-consistency tests hook in there.
    """
    if seed_boost is None:
        if beta <= 0:
            raise ValueError("alpha and beta must be positive")
        seed_boost = DEFAULT_SEED_BOOST_FACTOR * beta
    K = len(spec.topic_names)
    prior_kw = np.full((K, len(vocab)), beta, dtype=np.float64)
    for k, name in enumerate(spec.topic_names):
        for w in spec.seeds[name]:
            wid = vocab.index.get(w)
            if wid is None:
                import sys
                print(f"warning: seed word {w!r} for topic {name!r} not in vocabulary; dropped",
                      file=sys.stderr)
                continue
            prior_kw[k, wid] += seed_boost
    return _fit_gibbs(docs, vocab, tuple(spec.topic_names), alpha, beta,
                      seed_boost, prior_kw, n_sweeps, rng_seed, sweep_callback)


def _split_z(z_flat: np.ndarray, doc_tokens: list[np.ndarray]) -> list[np.ndarray]:
    out, pos = [], 0
    for t in doc_tokens:
        out.append(z_flat[pos:pos + len(t)].copy())
        pos += len(t)
    return out


def fit_lda(docs, vocab, K: int, alpha: float, beta: float,
            n_sweeps: int = DEFAULT_N_SWEEPS, rng_seed: int = 0,
            sweep_callback=None) -> TopicModelState:
    """Unseeded LDA: the seeded sampler with a flat word prior (boost 0)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    names = tuple(f"topic_{k}" for k in range(K))
    prior_kw = np.full((K, len(vocab)), beta, dtype=np.float64)
    return _fit_gibbs(docs, vocab, names, alpha, beta, 0.0, prior_kw,
                      n_sweeps, rng_seed, sweep_callback)


def doc_topic_posterior(state: TopicModelState, doc) -> np.ndarray:
    """Topic distribution for a document.

    An integer selects a training document (theta from its counts); a token
    list is folded in by sampling against the frozen topic-word counts.
    """
    if isinstance(doc, (int, np.integer)):
        counts = state.n_dk[int(doc)].astype(np.float64)
        theta = counts + state.alpha
    else:
        theta = _fold_in(state, list(doc)) + state.alpha
    return theta / theta.sum()


FOLD_IN_SWEEPS = 50


def _fold_in(state: TopicModelState, tokens: list[str]) -> np.ndarray:
    word_ids = state.vocab.encode(tokens)
    K = state.K
    if len(word_ids) == 0:
        return np.zeros(K)
    digest = hashlib.sha256(" ".join(tokens).encode()).digest()
    rng = np.random.default_rng(np.random.SeedSequence(
        [state.rng_seed, int.from_bytes(digest[:8], "little")]))
    prior_sum = state.prior_sums()
    z = rng.integers(0, K, size=len(word_ids)).astype(np.int64)
    n_dk = np.zeros((1, K), dtype=np.int64)
    np.add.at(n_dk, (np.zeros(len(word_ids), np.int64), z), 1)
    # frozen corpus counts: local increments cancel out of n_kw/n_k
    n_kw = state.n_kw.astype(np.int64).copy()
    n_k = state.n_k.astype(np.int64).copy()
    doc_ids = np.zeros(len(word_ids), dtype=np.int64)
    for _ in range(FOLD_IN_SWEEPS):
        uniforms = rng.random(len(word_ids))
        _gibbs_sweep(doc_ids, word_ids, z, n_dk, n_kw, n_k,
                     state.alpha, state.prior_kw, prior_sum, uniforms)
    return n_dk[0].astype(np.float64)


def aggregate_post_topics(per_image: list[np.ndarray]) -> np.ndarray:
    """Element-wise mean of per-image topic posteriors (stays on the simplex)."""
    if not per_image:
        raise ValueError("no per-image posteriors to aggregate")
    K = len(per_image[0])
    for theta in per_image:
        if len(theta) != K:
            raise ValueError("posterior length mismatch")
    return np.mean(np.stack(per_image), axis=0)


def binarize_topics(theta: np.ndarray, threshold: float | None = None) -> tuple[int, ...]:
    """Indicator per topic: 1 iff theta[k] strictly exceeds the threshold
    (default 1/K)."""
    theta = np.asarray(theta, dtype=np.float64)
    if threshold is None:
        threshold = 1.0 / len(theta)
    return tuple(int(t > threshold) for t in theta)


# ---------------------------------------------------------------------------
# seed construction and topic quality (appendix machinery)

def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _presence_matrix(state: TopicModelState, docs: list[list[str]]) -> list[set]:
    if len(docs) != state.n_docs:
        raise ValueError(f"{len(docs)} documents given for a state fitted on {state.n_docs}")
    idx = state.vocab.index
    return [{idx[t] for t in doc if t in idx} for doc in docs]


def information_gain(state: TopicModelState, docs: list[list[str]], w: str) -> np.ndarray:
    """IG of word presence for each topic's dominance event.

    The topic variable is binarized: for topic k the event is "the
    document's dominant (argmax) topic is k". Conditioning is on
    document-level presence of w. All entropies are base 2.
    """
    wid = state.vocab.index.get(w)
    if wid is None:
        raise ValueError(f"token {w!r} not in vocabulary")
    present = np.array([wid in s for s in _presence_matrix(state, docs)])
    dom = state.dominant_topics()
    return _information_gain_from(dom, present, state.K)


def _information_gain_from(dom: np.ndarray, present: np.ndarray, K: int) -> np.ndarray:
    D = len(dom)
    p_w = present.mean()
    out = np.zeros(K)
    for k in range(K):
        is_k = dom == k
        h_t = _binary_entropy(is_k.mean())
        h_cond = 0.0
        for mask, weight in ((present, p_w), (~present, 1 - p_w)):
            if weight > 0:
                h_cond += weight * _binary_entropy(is_k[mask].mean())
        out[k] = h_t - h_cond
    return out


def contrastive_seeds(state: TopicModelState, docs: list[list[str]],
                      n_per_topic: int) -> SeedSpec:
    """Top-IG words per topic with cross-topic duplicates removed.

    A word wanted by two or more topics is excluded from all of them and
    each topic refills from its own IG ranking (ties break by vocabulary
    index); repeated to a fixed point.
    """
    V = len(state.vocab)
    K = state.K
    dom = state.dominant_topics()
    presence = _presence_matrix(state, docs)
    present = np.zeros((V, len(docs)), dtype=bool)
    for d, s in enumerate(presence):
        for wid in s:
            present[wid, d] = True

    ig = np.zeros((K, V))
    for wid in range(V):
        ig[:, wid] = _information_gain_from(dom, present[wid], K)

    rankings = [sorted(range(V), key=lambda wid: (-ig[k, wid], wid)) for k in range(K)]
    banned: set[int] = set()
    while True:
        chosen: list[list[int]] = []
        for k in range(K):
            picks = [wid for wid in rankings[k] if wid not in banned][:n_per_topic]
            if len(picks) < n_per_topic:
                raise ValueError(
                    f"vocabulary too small: topic {state.topic_names[k]!r} has only "
                    f"{len(picks)} candidates after removing overlaps, needs {n_per_topic}")
            chosen.append(picks)
        counts: dict[int, int] = {}
        for picks in chosen:
            for wid in picks:
                counts[wid] = counts.get(wid, 0) + 1
        dupes = {wid for wid, c in counts.items() if c > 1}
        if not dupes:
            break
        banned |= dupes
    tokens = state.vocab.tokens
    return SeedSpec(state.topic_names,
                    {state.topic_names[k]: tuple(tokens[wid] for wid in chosen[k])
                     for k in range(K)})


def topic_diversity(word_sets: list[set]) -> float:
    """Mean pairwise Jaccard similarity between topic word sets."""
    k = len(word_sets)
    if k < 2:
        raise ValueError("need at least 2 word sets")
    total = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            union = word_sets[i] | word_sets[j]
            total += len(word_sets[i] & word_sets[j]) / len(union) if union else 1.0
    return 2.0 * total / (k * (k - 1))


def relevance(state: TopicModelState, w: str, topic: int,
              lam: float = DEFAULT_RELEVANCE_LAMBDA) -> float:
    """lam * P(w|T) + (1 - lam) * P(w|T) / P(w), with the smoothed
    within-topic estimate and the corpus token frequency for P(w)."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be in [0, 1]")
    wid = state.vocab.index.get(w)
    if wid is None:
        raise ValueError(f"token {w!r} not in vocabulary")
    p_w_t = ((state.n_kw[topic, wid] + state.prior_kw[topic, wid])
             / (state.n_k[topic] + state.prior_sums()[topic]))
    total_tokens = state.n_kw.sum()
    p_w = state.n_kw[:, wid].sum() / total_tokens if total_tokens else 0.0
    lift = p_w_t / p_w if p_w > 0 else 0.0
    return lam * p_w_t + (1.0 - lam) * lift


def representative_words(state: TopicModelState, topic: int, n_top: int,
                         lam: float = DEFAULT_RELEVANCE_LAMBDA) -> list[str]:
    scores = [(relevance(state, t, topic, lam), -i, t)
              for i, t in enumerate(state.vocab.tokens)]
    scores.sort(key=lambda s: (-s[0], -s[1]))
    return [t for _, _, t in scores[:n_top]]


def npmi_pair(p_i: float, p_j: float, p_ij: float, eps: float = NPMI_EPS) -> float:
    p_i, p_j, p_ij = p_i + eps, p_j + eps, p_ij + eps
    return math.log2(p_ij / (p_i * p_j)) / (-math.log2(p_ij))


def topic_coherence_npmi(state: TopicModelState, docs: list[list[str]],
                         n_top: int, lam: float = DEFAULT_RELEVANCE_LAMBDA) -> np.ndarray:
    """Mean pairwise NPMI over each topic's representative words.

    Probabilities are document-level (presence) frequencies over docs with
    epsilon smoothing; a never-co-occurring pair scores close to -1 rather
    than erroring. Per-topic scores lie in [-1, 1].
    """
    if n_top < 2:
        raise ValueError("n_top must be >= 2")
    D = len(docs)
    if D == 0:
        raise ValueError("no documents")
    doc_sets = [set(doc) for doc in docs]
    out = np.zeros(state.K)
    for k in range(state.K):
        words = representative_words(state, k, n_top, lam)
        total, n_pairs = 0.0, 0
        for i in range(len(words)):
            docs_i = [s for s in doc_sets if words[i] in s]
            p_i = len(docs_i) / D
            for j in range(i + 1, len(words)):
                p_j = sum(words[j] in s for s in doc_sets) / D
                p_ij = sum(words[j] in s for s in docs_i) / D
                total += npmi_pair(p_i, p_j, p_ij)
                n_pairs += 1
        out[k] = total / n_pairs if n_pairs else 0.0
    return out


def default_hyperparam_grid() -> list[tuple[float, float]]:
    return [(a, b) for a in HYPERPARAM_GRID_POINTS for b in HYPERPARAM_GRID_POINTS]


def select_hyperparams(docs, vocab, spec: SeedSpec,
                       grid: list[tuple[float, float]] | None = None,
                       n_sweeps: int = 200, rng_seed: int = 0,
                       n_top: int = 6, lam: float = DEFAULT_RELEVANCE_LAMBDA,
                       seed_boost_factor: float = DEFAULT_SEED_BOOST_FACTOR,
                       ) -> tuple[float, float]:
    """Fit one model per (alpha, beta) cell and return the cell with maximal
    mean NPMI coherence; ties go to the earlier grid entry."""
    if grid is None:
        grid = default_hyperparam_grid()
    if not grid:
        raise ValueError("empty grid")
    best, best_score = None, -math.inf
    for alpha, beta in grid:
        state = fit_seeded_lda(docs, vocab, spec, alpha, beta,
                               seed_boost_factor * beta, n_sweeps, rng_seed)
        score = float(np.mean(topic_coherence_npmi(state, docs, n_top, lam)))
        if score > best_score:
            best, best_score = (alpha, beta), score
    return best


def seed_assignment_share(state: TopicModelState, spec: SeedSpec) -> dict[str, float]:
    """Per-topic share of seed-word tokens assigned to their seeded topic."""
    out = {}
    for k, name in enumerate(state.topic_names):
        ids = [state.vocab.index[w] for w in spec.seeds[name] if w in state.vocab.index]
        assigned = sum(int(state.n_kw[k, wid]) for wid in ids)
        total = sum(int(state.n_kw[:, wid].sum()) for wid in ids)
        out[name] = assigned / total if total else float("nan")
    return out


def save_model(state: TopicModelState, path) -> None:
    with open(path, "w") as fh:
        json.dump(state.to_json(), fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> TopicModelState:
    with open(path) as fh:
        return state_from_json(json.load(fh))
