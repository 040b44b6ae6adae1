"""Synchronous message-passing discovery of each follower's influential agents.

Every round, follower ``i`` replaces its three sets (influential leaders,
influential followers, influential edges) with the union of its initial sets
and the previous-round sets of its follower neighbours. Leaders never relay.
"""
from dataclasses import dataclass, field
from types import MappingProxyType

from .errors import ScenarioError
from .graph import check_assumptions, neighbor_leaders


@dataclass(frozen=True)
class FollowerSets:
    """What one follower knows: leader labels, follower labels, ``(to, from) -> weight``."""

    leaders: frozenset
    followers: frozenset
    edges: MappingProxyType

    def union(self, other):
        edges = dict(self.edges)
        for key, w in other.edges.items():
            if key in edges and edges[key] != w:
                raise ScenarioError(f"conflicting weights for edge {key}: {edges[key]} vs {w}")
            edges[key] = w
        return FollowerSets(
            self.leaders | other.leaders,
            self.followers | other.followers,
            MappingProxyType(dict(sorted(edges.items()))),
        )

    def same_content(self, other):
        return (self.leaders == other.leaders and self.followers == other.followers
                and dict(self.edges) == dict(other.edges))


@dataclass(frozen=True)
class DiscoveryState:
    sets: MappingProxyType
    round: int = 0
    changed: frozenset = frozenset()  # followers whose sets changed in this round


@dataclass(frozen=True)
class DiscoveryResult:
    """Converged sets per follower.

    ``rounds_used`` counts executed rounds, including the final round in which
    nothing changed. ``change_rounds[i]`` lists the rounds in which follower
    ``i`` learned something; ``local_stop[i]`` is the round at which the
    per-agent two-round-lookback rule lets ``i`` stop.
    """

    sets: MappingProxyType
    rounds_used: int
    change_rounds: MappingProxyType = field(repr=False)
    local_stop: MappingProxyType = field(repr=False)

    def leaders(self, i):
        return self.sets[i].leaders

    def followers(self, i):
        return self.sets[i].followers

    def edges(self, i):
        return self.sets[i].edges


def initial_sets(g, i):
    leaders = frozenset(neighbor_leaders(g, i))
    followers = frozenset({i} | set(g.in_edges[i])) - leaders
    edges = MappingProxyType({(i, j): w for j, w in g.in_edges[i].items()})
    return FollowerSets(leaders, followers, edges)


def init_discovery(g):
    return DiscoveryState(MappingProxyType({i: initial_sets(g, i) for i in g.followers}))


def discovery_round(g, state):
    """One synchronous exchange: every follower reads the previous snapshot."""
    new = {}
    changed = set()
    for i in g.followers:
        acc = initial_sets(g, i)
        for j in g.follower_in_neighbors(i):
            acc = acc.union(state.sets[j])
        if not acc.same_content(state.sets[i]):
            changed.add(i)
        new[i] = acc
    return DiscoveryState(MappingProxyType(new), state.round + 1, frozenset(changed))


def _local_stop_rounds(g, history):
    """First round ``k`` at which follower ``i`` saw no change and none of its
    follower neighbours changed in round ``k - 1``."""
    stops = {}
    for i in g.followers:
        nbrs = g.follower_in_neighbors(i)
        for k in range(1, len(history)):
            prev_changed = history[k - 1].changed
            if i not in history[k].changed and not any(j in prev_changed for j in nbrs):
                stops[i] = k
                break
        else:
            # the round after a global fixpoint always satisfies the rule
            stops[i] = len(history)
    return stops


def run_discovery(g, max_rounds=None):
    """Iterate :func:`discovery_round` until a full round changes nothing."""
    check_assumptions(g)
    limit = max_rounds if max_rounds is not None else g.n + 2
    state = init_discovery(g)
    history = [state]
    while True:
        state = discovery_round(g, state)
        history.append(state)
        if not state.changed:
            break
        if state.round >= limit:
            raise RuntimeError(f"discovery did not converge in {limit} rounds")
    change_rounds = {i: tuple(s.round for s in history[1:] if i in s.changed)
                     for i in g.followers}
    return DiscoveryResult(
        sets=state.sets,
        rounds_used=state.round,
        change_rounds=MappingProxyType(change_rounds),
        local_stop=MappingProxyType(_local_stop_rounds(g, history)),
    )
