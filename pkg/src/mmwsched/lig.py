"""Local interaction game over (AP, UE) players with log-linear learning.

Each eligible (AP, UE) pair is a player whose strategy is 0 (off) or a beam
index 1..N_B.  A player's utility is its rate averaged over every combination
of concurrently active players at the interfering APs; the potential is the
sum of utilities and equals the weighted sum rate on feasible profiles.

Neighbour sets per player l:
  same_ap   players at l's AP (l excluded)
  same_ue   players serving l's UE (l excluded)
  interferers_in   players whose best beam reaches l's UE above ``i_th``
  interfered_out   players whose UE l's best beam reaches above ``i_th``
  utility_deps     players whose strategy can change l's utility
  payoff_set       l plus every player whose utility depends on l
  payoff_deps      players whose strategy can change l's payoff
"""
from __future__ import annotations

import bisect
import csv
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import CapacityError, ValidationError
from .instance import Instance, Selection
from .mcmc import SCHEDULES, annealing_value

DEFAULT_UTILITY_CAP = 100_000


@dataclass(frozen=True)
class Player:
    id: int
    ap: int
    ue: int
    beam: int  # best beam for this pair, 0-based


class Game:
    """Players, thresholds and neighbour sets for one instance.

    ``payoff_rule="closure"`` (default) builds the payoff set as every player
    whose utility depends on l, which makes the potential identity exact for any
    ``i_th``.  ``"literal"`` uses l plus its same-AP, same-UE and
    interfered-out neighbours only.
    """

    def __init__(self, instance: Instance, s_t: Optional[float] = None, i_th: Optional[float] = None,
                 payoff_rule: str = "closure", utility_cap: int = DEFAULT_UTILITY_CAP):
        if s_t is None:
            s_t = instance.noise_power
        if i_th is None:
            i_th = instance.noise_power / 10.0
        if s_t < 0 or i_th < 0:
            raise ValidationError("thresholds must be >= 0")
        if payoff_rule not in ("closure", "literal"):
            raise ValidationError(f"unknown payoff_rule {payoff_rule!r}")
        if utility_cap < 1:
            raise ValidationError("utility_cap must be >= 1")
        self.instance = instance
        self.s_t = float(s_t)
        self.i_th = float(i_th)
        self.payoff_rule = payoff_rule
        self.utility_cap = int(utility_cap)
        self.n_strategies = instance.n_beams + 1

        s = instance.s
        best = instance.best_beams()
        best_rss = instance.best_rss()
        self.players: list[Player] = []
        for a in range(instance.n_aps):
            for u in range(instance.n_ues):
                if best_rss[u, a] >= s_t:
                    self.players.append(Player(len(self.players), a, u, int(best[u, a])))
        L = len(self.players)
        self.ap = [p.ap for p in self.players]
        self.ue = [p.ue for p in self.players]
        self.by_ap: list[list[int]] = [[] for _ in range(instance.n_aps)]
        for p in self.players:
            self.by_ap[p.ap].append(p.id)

        # interference of l's best beam at l''s UE
        def reach(l, lp):
            pl = self.players[l]
            return s[pl.beam, self.ue[lp], pl.ap]

        self.same_ap = [frozenset(q for q in self.by_ap[p.ap] if q != p.id) for p in self.players]
        self.same_ue = [frozenset(q.id for q in self.players if q.ue == p.ue and q.id != p.id)
                        for p in self.players]
        self.interferers_in, self.interfered_out = [], []
        for l in range(L):
            excl = self.same_ap[l] | self.same_ue[l] | {l}
            self.interferers_in.append(frozenset(
                q for q in range(L) if q not in excl and reach(q, l) > i_th))
            self.interfered_out.append(frozenset(
                q for q in range(L) if q not in excl and reach(l, q) > i_th))

        # APs that can contribute to l's average: interferers and same-UE rivals
        self._contacts = [sorted(self.interferers_in[l] | self.same_ue[l]) for l in range(L)]
        self.utility_deps = []
        for l in range(L):
            aps = {self.ap[l]} | {self.ap[q] for q in self._contacts[l]}
            self.utility_deps.append(frozenset(q for a in aps for q in self.by_ap[a] if q != l))
        if payoff_rule == "closure":
            dependents = [{l} for l in range(L)]
            for lp in range(L):
                for q in self.utility_deps[lp]:
                    dependents[q].add(lp)
            self.payoff_set = [frozenset(d) for d in dependents]
        else:
            self.payoff_set = [frozenset({l} | self.same_ap[l] | self.same_ue[l] | self.interfered_out[l])
                               for l in range(L)]
        self.payoff_deps = []
        for l in range(L):
            deps = set()
            for lp in self.payoff_set[l]:
                deps.add(lp)
                deps |= self.utility_deps[lp]
            deps.discard(l)
            self.payoff_deps.append(frozenset(deps))

        self._ut_list = [sorted(d) for d in self.utility_deps]
        self._p_list = [sorted(d) for d in self.payoff_deps]
        self._ps_list = [sorted(d) for d in self.payoff_set]
        self._masks = [sum(1 << q for q in ({l} | self.payoff_deps[l])) for l in range(L)]
        self._s = s.tolist()
        self._w = instance.weights.tolist()
        self._vcache: dict = {}
        self._ycache: dict = {}

    @property
    def n_players(self) -> int:
        return len(self.players)

    def all_off(self) -> list[int]:
        return [0] * self.n_players

    def check_profile(self, z: Sequence[int]) -> list[int]:
        z = [int(x) for x in z]
        if len(z) != self.n_players:
            raise ValidationError(f"profile has length {len(z)}, game has {self.n_players} players")
        if any(x < 0 or x >= self.n_strategies for x in z):
            raise ValidationError(f"strategy out of range 0..{self.n_strategies - 1}")
        return z

    # ---- utilities ---------------------------------------------------------

    def _utility_raw(self, l: int, z) -> float:
        zl = z[l]
        a, u = self.ap[l], self.ue[l]
        S = self._s
        inst = self.instance
        signal = S[zl - 1][u][a]
        k_own = sum(1 for p in self.by_ap[a] if z[p] > 0)
        aps = sorted({self.ap[q] for q in self._contacts[l] if z[q] > 0})
        groups = []
        n_terms = 1
        for i in aps:
            act = [p for p in self.by_ap[i] if z[p] > 0]
            n_terms *= len(act)
            groups.append(act)
        if n_terms > self.utility_cap:
            raise CapacityError(
                f"utility of player {l} needs {n_terms} terms, cap is {self.utility_cap}")
        n0 = inst.noise_power
        if n_terms <= 256:
            total = 0.0
            for combo in itertools.product(*groups):
                interference = 0.0
                clash = False
                for p in combo:
                    if self.ue[p] == u:
                        clash = True
                        break
                    interference += S[z[p] - 1][u][self.ap[p]]
                if not clash:
                    total += math.log2(1.0 + signal / (n0 + interference))
        else:
            interference = np.zeros(())
            clash = np.zeros((), dtype=bool)
            for g in groups:
                vals = np.array([S[z[p] - 1][u][self.ap[p]] for p in g])
                same = np.array([self.ue[p] == u for p in g])
                interference = np.add.outer(interference, vals)
                clash = np.logical_or.outer(clash, same)
            r = np.log2(1.0 + signal / (n0 + interference))
            total = float(np.where(clash, 0.0, r).sum())
        return self._w[u] * inst.bandwidth * total / (k_own * n_terms)

    def utility(self, l: int, z) -> float:
        zl = z[l]
        if zl == 0:
            return 0.0
        key = (l, zl) + tuple(z[p] for p in self._ut_list[l])
        v = self._vcache.get(key)
        if v is None:
            v = self._utility_raw(l, z)
            self._vcache[key] = v
        return v

    def payoff(self, l: int, z) -> float:
        return math.fsum(self.utility(q, z) for q in self._ps_list[l])

    def payoff_vector(self, l: int, z) -> np.ndarray:
        """Payoff of player l for every strategy, other players fixed."""
        key = (l,) + tuple(z[p] for p in self._p_list[l])
        y = self._ycache.get(key)
        if y is None:
            z = list(z)
            y = np.empty(self.n_strategies)
            for s in range(self.n_strategies):
                z[l] = s
                y[s] = self.payoff(l, z)
            self._ycache[key] = y
        return y

    def potential(self, z) -> float:
        return math.fsum(self.utility(l, z) for l in range(self.n_players))

    def strategy_probabilities(self, l: int, z, beta: float) -> np.ndarray:
        """Softmax of beta * payoff / B over l's strategies (max-shifted)."""
        x = beta * self.payoff_vector(l, z) / self.instance.bandwidth
        x = np.exp(x - x.max())
        return x / x.sum()

    # ---- feasibility --------------------------------------------------------

    def is_feasible(self, z) -> bool:
        aps, ues = set(), set()
        for l, s in enumerate(z):
            if s > 0:
                if self.ap[l] in aps or self.ue[l] in ues:
                    return False
                aps.add(self.ap[l])
                ues.add(self.ue[l])
        return True

    def to_selection(self, z) -> Selection:
        if not self.is_feasible(z):
            raise ValidationError("profile is not feasible; repair it first")
        entries: list = [None] * self.instance.n_aps
        for l, s in enumerate(z):
            if s > 0:
                entries[self.ap[l]] = (s - 1, self.ue[l])
        return Selection(tuple(entries))


def build_game(instance: Instance, s_t: Optional[float] = None, i_th: Optional[float] = None,
               **kwargs) -> Game:
    return Game(instance, s_t, i_th, **kwargs)


def utility(game: Game, l: int, profile) -> float:
    return game.utility(l, game.check_profile(profile))


def payoff(game: Game, l: int, profile) -> float:
    return game.payoff(l, game.check_profile(profile))


def potential(game: Game, profile) -> float:
    return game.potential(game.check_profile(profile))


def is_independent(game: Game, players) -> bool:
    used = 0
    for l in players:
        if game._masks[l] & used:
            return False
        used |= game._masks[l]
    return True


def sample_independent_player_set(game: Game, rng: np.random.Generator) -> list[int]:
    """Random permutation, keep each player whose payoff neighbourhood is still untouched."""
    chosen, used = [], 0
    for l in rng.permutation(game.n_players):
        m = game._masks[l]
        if not m & used:
            chosen.append(int(l))
            used |= m
    return chosen


def _draw(probs: np.ndarray, u: float) -> int:
    k = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return min(k, len(probs) - 1)


def gibbs_update(game: Game, profile, l: int, beta: float, rng: np.random.Generator) -> int:
    """Sample a new strategy for player l from the softmax of its payoffs."""
    z = game.check_profile(profile)
    return _draw(game.strategy_probabilities(l, z, beta), rng.random())


def feasibility_repair(game: Game, profile, check: bool = True) -> list[int]:
    """Switch players off until no AP or UE has two active players.

    AP conflicts first (lowest AP index): the player whose removal leaves the
    largest potential is switched off.  Then UE conflicts: lowest player id.
    """
    z = game.check_profile(profile)
    while True:
        crowded = next((a for a in range(game.instance.n_aps)
                        if sum(1 for p in game.by_ap[a] if z[p] > 0) >= 2), None)
        if crowded is None:
            break
        before = game.potential(z) if check else 0.0
        best, best_val = None, -math.inf
        for p in game.by_ap[crowded]:
            if z[p] > 0:
                trial = list(z)
                trial[p] = 0
                val = game.potential(trial)
                if val > best_val:
                    best, best_val = p, val
        z[best] = 0
        if check:
            assert best_val >= before - 1e-9 * max(1.0, abs(before)), \
                f"switching off a player on AP {crowded} lowered the potential"
    while True:
        seen: dict[int, int] = {}
        clash = None
        for l, s in enumerate(z):
            if s > 0:
                if game.ue[l] in seen:
                    clash = min(l, seen[game.ue[l]])
                    break
                seen[game.ue[l]] = l
        if clash is None:
            break
        z[clash] = 0
    return z


# ---- learning dynamics -----------------------------------------------------

@dataclass
class LigParams:
    max_iters: int = 5000
    beta0: float = 1.0
    schedule: str = "log"
    seed: int = 0
    stop_epsilon: Optional[float] = None
    dynamics: str = "concurrent"  # concurrent | single | best_response
    record_trace: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.beta0 < 0:
            raise ValidationError("beta0 must be >= 0")
        if self.schedule not in SCHEDULES:
            raise ValidationError(f"unknown schedule {self.schedule!r}")
        if self.stop_epsilon is not None and not (0 < self.stop_epsilon < 1):
            raise ValidationError("stop_epsilon must be in (0, 1)")
        if self.dynamics not in ("concurrent", "single", "best_response"):
            raise ValidationError(f"unknown dynamics {self.dynamics!r}")

    def beta(self, i: int) -> float:
        return annealing_value(self.schedule, self.beta0, i)


@dataclass
class LigTrace:
    iteration: list = field(default_factory=list)
    potential: list = field(default_factory=list)
    n_active: list = field(default_factory=list)
    feasible: list = field(default_factory=list)
    iterations_run: int = 0
    stopped_early: bool = False
    raw_profile: list = field(default_factory=list)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "potential", "n_active", "feasible"])
        for i, psi, n, f in zip(self.iteration, self.potential, self.n_active, self.feasible):
            w.writerow([i, f"{psi:.17g}", n, int(f)])


def lig_select(game: Game, params: Optional[LigParams] = None):
    """Run the learning dynamics; return (repaired profile, selection, trace)."""
    params = params or LigParams()
    rng = np.random.default_rng(params.seed)
    L = game.n_players
    z = game.all_off()
    trace = LigTrace()
    if L == 0:
        trace.raw_profile = []
        return [], Selection.empty(game.instance.n_aps), trace
    last_peak = [0.0] * L
    updated = [False] * L
    n_updated = 0
    it = 0
    for it in range(1, params.max_iters + 1):
        beta = params.beta(it)
        if params.dynamics == "concurrent":
            movers = sample_independent_player_set(game, rng)
        elif params.dynamics == "single":
            movers = [int(rng.integers(L))]
        else:
            movers = [(it - 1) % L]
        # movers have disjoint payoff neighbourhoods, so in-place updates
        # see exactly the previous iteration's strategies
        for l in movers:
            if params.dynamics == "best_response":
                y = game.payoff_vector(l, z)
                z[l] = int(np.argmax(y))
                last_peak[l] = 1.0
            else:
                probs = game.strategy_probabilities(l, z, beta)
                z[l] = _draw(probs, rng.random())
                last_peak[l] = float(probs.max())
            if not updated[l]:
                updated[l] = True
                n_updated += 1
        if params.record_trace:
            trace.iteration.append(it)
            trace.potential.append(game.potential(z))
            trace.n_active.append(sum(1 for s in z if s > 0))
            trace.feasible.append(game.is_feasible(z))
        if (params.stop_epsilon is not None and n_updated == L
                and min(last_peak) >= 1.0 - params.stop_epsilon):
            trace.stopped_early = True
            break
    trace.iterations_run = it
    trace.raw_profile = list(z)
    repaired = feasibility_repair(game, z)
    return repaired, game.to_selection(repaired), trace


# ---- exact small-game diagnostics -------------------------------------------

def enumerate_profiles(game: Game, cap: int = 4096) -> list[tuple]:
    size = game.n_strategies ** game.n_players
    if size > cap:
        raise CapacityError(f"strategy space has {size} profiles, cap is {cap}")
    return list(itertools.product(range(game.n_strategies), repeat=game.n_players))


def single_update_kernel(game: Game, beta: float, cap: int = 4096):
    """Transition matrix of the one-random-player-per-step dynamics.

    Returns ``(P, profiles)``.
    """
    profiles = enumerate_profiles(game, cap)
    index = {p: k for k, p in enumerate(profiles)}
    L = game.n_players
    P = np.zeros((len(profiles), len(profiles)))
    for k, z in enumerate(profiles):
        for l in range(L):
            probs = game.strategy_probabilities(l, z, beta)
            for s in range(game.n_strategies):
                t = z[:l] + (s,) + z[l + 1:]
                P[k, index[t]] += probs[s] / L
    return P, profiles


def gibbs_distribution(game: Game, beta: float, cap: int = 4096):
    """pi(z) proportional to exp(beta * potential / B); returns ``(pi, profiles)``."""
    profiles = enumerate_profiles(game, cap)
    psi = np.array([game.potential(z) for z in profiles]) * beta / game.instance.bandwidth
    pi = np.exp(psi - psi.max())
    return pi / pi.sum(), profiles


@dataclass(frozen=True)
class IterationBound:
    eta: float
    distance: int
    nu0: float
    bound: float
    optimum: float
    optimal_profiles: tuple


def optimal_profiles(game: Game, cap: int = 4096, tol: float = 1e-9):
    profiles = enumerate_profiles(game, cap)
    psi = np.array([game.potential(z) for z in profiles])
    best = psi.max()
    opt = tuple(p for p, v in zip(profiles, psi) if v >= best - tol * max(1.0, abs(best)))
    return opt, float(best), profiles


def eta_and_bound(game: Game, beta: float, cap: int = 4096, player_choice: bool = True) -> IterationBound:
    """Minimum single-update probability, worst hitting distance and the iteration bound.

    With ``player_choice`` the probability of picking the updating player
    (1/L) is folded into eta, which is what the one-player-per-step chain
    actually does.  Without it eta is the bare softmax minimum.
    """
    opt, best, profiles = optimal_profiles(game, cap)
    L = game.n_players
    if L == 0:
        return IterationBound(1.0, 0, 1.0, 0.0, 0.0, opt)
    eta = 1.0
    for z in profiles:
        for l in range(L):
            if z[l] != 0:
                continue  # payoff vector does not depend on z_l
            eta = min(eta, float(game.strategy_probabilities(l, z, beta).min()))
    if player_choice:
        eta /= L
    # BFS from the optimal set over single-player moves
    dist = {p: 0 for p in opt}
    queue = deque(opt)
    while queue:
        p = queue.popleft()
        for l in range(L):
            for s in range(game.n_strategies):
                if s == p[l]:
                    continue
                q = p[:l] + (s,) + p[l + 1:]
                if q not in dist:
                    dist[q] = dist[p] + 1
                    queue.append(q)
    D = max(dist.values())
    nu0 = 1.0 if tuple(game.all_off()) in set(opt) else 0.0
    bound = 0.0 if nu0 == 1.0 else D * (1.0 - nu0) / eta ** D
    return IterationBound(eta, D, nu0, bound, best, opt)


def first_hitting_iteration(game: Game, beta: float, targets, rng: np.random.Generator,
                            max_iters: int = 10**7, cap: int = 4096) -> int:
    """Iterations of the one-random-player dynamics from all-off until a target profile is hit.

    The per-state update probabilities are tabulated up front, so the strategy
    space must fit under ``cap``.
    """
    profiles = enumerate_profiles(game, cap)
    index = {p: k for k, p in enumerate(profiles)}
    hit = np.zeros(len(profiles), dtype=bool)
    for t in targets:
        hit[index[tuple(t)]] = True
    L, c = game.n_players, game.n_strategies
    k = index[tuple(game.all_off())]
    if hit[k]:
        return 0
    # cum[k][l] = cumulative update probabilities of player l in profile k
    cum = [[np.cumsum(game.strategy_probabilities(l, z, beta)).tolist() for l in range(L)]
           for z in profiles]
    place = [c ** (L - 1 - l) for l in range(L)]
    chunk = 65536
    it = 0
    while it < max_iters:
        players = rng.integers(L, size=chunk).tolist()
        uniforms = rng.random(chunk).tolist()
        for l, u in zip(players, uniforms):
            it += 1
            row = cum[k][l]
            s = min(bisect.bisect_right(row, u), c - 1)
            k += (s - (k // place[l]) % c) * place[l]
            if hit[k]:
                return it
            if it >= max_iters:
                break
    raise RuntimeError(f"no optimal profile reached within {max_iters} iterations")
