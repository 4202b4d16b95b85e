"""Slice distributions, singular net distributions and communication architectures."""
import logging
from collections import deque
from itertools import combinations, product
from typing import Iterable, Iterator, Mapping, Optional

from immutabledict import immutabledict
from tqdm import tqdm

from models.distribution import CommunicationGraph, SingularNet, SingularNetDistribution, SliceDistribution
from models.games import ControlGame, Objective, PetriGame
from models.nets import EMPTY, Marking, PetriNet
from models.reports import DistributionReport
from utils.config import get_settings, resolve
from utils.errors import BoundExceeded, IncompatibleFamily, NotConcurrencyPreserving, SizeLimit
from utils.nets import is_concurrency_preserving, is_one_bounded, reachable_markings


def _restrict(marking: Marking, places: frozenset) -> Marking:
    return Marking.of({p: c for p, c in marking.counts.items() if p in places})


def slice_subnet(net: PetriNet, places: Iterable[str], name: str) -> PetriNet:
    """The subnet spanned by ``places`` and every transition touching them."""
    places = frozenset(places)
    transitions = frozenset(
        t for t in net.transitions if (net.pre[t].support | net.post[t].support) & places
    )
    return PetriNet(
        places=places,
        transitions=transitions,
        pre={t: _restrict(net.pre[t], places) for t in transitions},
        post={t: _restrict(net.post[t], places) for t in transitions},
        initial=_restrict(net.initial, places),
        name=name,
    )


def distribution_from_blocks(net: PetriNet, blocks: Iterable[Iterable[str]]) -> SliceDistribution:
    """Slice distribution with slices ``s1 .. sk`` in the order of their sorted place sets."""
    ordered = sorted(tuple(sorted(block)) for block in blocks)
    slices = [slice_subnet(net, block, f"s{i}") for i, block in enumerate(ordered, start=1)]
    return SliceDistribution(net, tuple(slices))


def validate_slice_distribution(d: SliceDistribution) -> DistributionReport:
    """
    Check every slice clause, the place partition and the composition.

    Clauses: ``slice-subnet`` (restriction of the base), ``slice-initial`` (one initial
    token), ``slice-single-token`` (one place before and after every transition),
    ``slice-postset`` (all base transitions leaving a place belong to the slice),
    ``partition`` and ``composition``.
    """
    base = d.base
    report = DistributionReport(members=len(d.slices))
    owner = {}
    for s in d.slices:
        if not (s.places <= base.places and s.transitions <= base.transitions):
            report.add("slice-subnet", f"{s.name} has nodes outside the base net")
            continue
        for t in sorted(s.transitions):
            if s.pre[t] != _restrict(base.pre[t], s.places) or s.post[t] != _restrict(base.post[t], s.places):
                report.add("slice-subnet", f"{s.name}: flow of {t} is not the restricted base flow")
            if len(s.pre[t]) != 1 or len(s.post[t]) != 1:
                report.add("slice-single-token", f"{s.name}: {t} has |pre|={len(s.pre[t])} |post|={len(s.post[t])}")
        if s.initial != _restrict(base.initial, s.places):
            report.add("slice-subnet", f"{s.name}: initial marking is not the restricted base marking")
        if len(s.initial) != 1:
            report.add("slice-initial", f"{s.name} holds {len(s.initial)} initial tokens")
        for place in sorted(s.places):
            missing = base.postset(place) - s.transitions
            if missing:
                report.add("slice-postset", f"{s.name}: {sorted(missing)} leave {place} but are not in the slice")
            if place in owner:
                report.add("partition", f"{place} belongs to {owner[place]} and {s.name}")
            owner.setdefault(place, s.name)
    uncovered = base.places - owner.keys()
    if uncovered:
        report.add("partition", f"places {sorted(uncovered)} belong to no slice")
    covered = set().union(*(s.transitions for s in d.slices)) if d.slices else set()
    if covered != base.transitions:
        report.add("composition", f"transitions {sorted(base.transitions - covered)} belong to no slice")
    return report


### SLICE SEARCH ###


def _flow_order(net: PetriNet, roots: list) -> list:
    """Places in the order a token reaches them from the initial places."""
    order, seen = [], set(roots)
    queue = deque(roots)
    while queue:
        place = queue.popleft()
        for transition in sorted(net.postset(place)):
            for successor in sorted(net.post[transition].support):
                if successor not in seen:
                    seen.add(successor)
                    order.append(successor)
                    queue.append(successor)
    order.extend(sorted(net.places - seen))
    return order


def _candidates(net: PetriNet, part: dict, place: str, parts: int) -> list:
    # a produced token stays in one of the parts its producer consumed from
    options = set(range(parts))
    for producer in sorted(net.preset(place)):
        consumed = net.pre[producer].support
        if all(p in part for p in consumed):
            options &= {part[p] for p in consumed}
    return sorted(options)


def _consistent(net: PetriNet, part: dict, transition: str, strict: bool) -> bool:
    pre = [part[p] for p in net.pre[transition].support if p in part]
    post = [part[p] for p in net.post[transition].support if p in part]
    if strict and (len(set(pre)) != len(pre) or len(set(post)) != len(post)):
        return False
    if len(pre) == len(net.pre[transition].support) and len(post) == len(net.post[transition].support):
        return set(pre) == set(post)
    return True


def iter_slice_distributions(
    net: PetriNet,
    strict: bool = True,
    search_cap: Optional[int] = None,
) -> Iterator[SliceDistribution]:
    """
    Enumerate the distributions of ``net``, one part per initial token.

    With ``strict`` every part is a slice: the net must be concurrency preserving and
    1-bounded and every transition moves at most one token of each part. Otherwise parts
    are token partitions: every transition touches the same parts with its preset and its
    postset.

    Raises:
        SizeLimit: When more than ``search_cap`` partial assignments are tried.
    """
    search_cap = resolve(search_cap, "search_cap")
    if not net.initial.is_set():
        return
    if any(not net.pre[t].support and not net.post[t].support for t in net.transitions):
        return
    if strict and not (net.is_set_like() and is_concurrency_preserving(net) and is_one_bounded(net)):
        logging.info(f"{net.name} is not concurrency preserving and 1-bounded; no slices")
        return
    roots = sorted(net.initial.support)
    part = {place: i for i, place in enumerate(roots)}
    if not all(_consistent(net, part, t, strict) for t in net.transitions):
        return
    order = _flow_order(net, roots)
    tried = 0

    with tqdm(desc=f"slicing {net.name}", unit="node", disable=not get_settings().progress) as bar:
        def search(index: int) -> Iterator[SliceDistribution]:
            nonlocal tried
            if index == len(order):
                blocks = [[p for p, i in part.items() if i == block] for block in range(len(roots))]
                yield distribution_from_blocks(net, blocks)
                return
            place = order[index]
            for candidate in _candidates(net, part, place, len(roots)):
                tried += 1
                bar.update()
                if tried > search_cap:
                    raise SizeLimit(f"slice search of {net.name} exceeded {search_cap} assignments")
                part[place] = candidate
                touched = net.preset(place) | net.postset(place)
                if all(_consistent(net, part, t, strict) for t in touched):
                    yield from search(index + 1)
                del part[place]

        yield from search(0)


def find_slice_distribution(net: PetriNet, search_cap: Optional[int] = None) -> Optional[SliceDistribution]:
    found = next(iter_slice_distributions(net, strict=True, search_cap=search_cap), None)
    if found is None:
        logging.info(f"{net.name} is not sliceable")
    else:
        logging.info(f"Slice distribution of {net.name} found OK ({len(found.slices)} slices)")
    return found


### SINGULAR NETS ###


def _combinations(places: Iterable[str], pre: Marking, pi: Mapping) -> list:
    """Sets of distinct ``places`` whose labels are exactly the multiset ``pre``."""
    by_label = {}
    for place in sorted(places):
        by_label.setdefault(pi[place], []).append(place)
    found = set()
    for combo in product(*(by_label.get(label, []) for label in pre)):
        if len(set(combo)) == len(combo):
            found.add(frozenset(combo))
    return sorted(found, key=sorted)


def compose_snd(nets: Iterable[SingularNet], name: str = "composition") -> tuple[PetriNet, immutabledict]:
    """
    Union of a compatible family of singular nets.

    Raises:
        IncompatibleFamily: When two members share a place or label a shared transition
            differently.
    """
    places, transitions, pi = set(), set(), {}
    pre, post, initial = {}, {}, EMPTY
    for member in nets:
        overlap = places & member.net.places
        if overlap:
            raise IncompatibleFamily(f"{member.name} shares places {sorted(overlap)}")
        places |= member.net.places
        for node, label in member.pi.items():
            if pi.setdefault(node, label) != label:
                raise IncompatibleFamily(f"{node} is labelled {pi[node]} and {label}")
        for t in member.net.transitions:
            pre[t] = pre.get(t, EMPTY) + member.net.pre[t]
            post[t] = post.get(t, EMPTY) + member.net.post[t]
        transitions |= member.net.transitions
        initial = initial + member.net.initial
    net = PetriNet(places=places, transitions=transitions, pre=pre, post=post, initial=initial, name=name)
    return net, immutabledict(sorted(pi.items()))


class _SndBuilder:
    """
    Grow one singular net per initial token until every enabled situation has a copy.

    A member ``m{j}`` owns the copies ``{place}.{j}`` of base places. A transition copy is
    identified by its base label and its preset; its postset assigns the involved members,
    in member order, to the sorted post places.
    """

    def __init__(self, net: PetriNet, state_cap: int):
        self.net = net
        self.state_cap = state_cap
        self.tokens = list(net.initial)
        self.pi = {}
        self.member = {}
        self.copies = {}
        self.pre = {}
        self.post = {}
        self.owned = {j: set() for j in range(1, len(self.tokens) + 1)}

    def place(self, label: str, j: int) -> str:
        name = f"{label}.{j}"
        if name not in self.pi:
            self.pi[name] = label
            self.member[name] = j
        return name

    def copy(self, transition: str, combo: frozenset) -> str:
        key = (transition, combo)
        if key in self.copies:
            return self.copies[key]
        ordered = sorted(combo, key=lambda c: (self.pi[c], self.member[c]))
        involved = [self.member[c] for c in ordered]
        name = f"{transition}@{','.join(str(j) for j in involved)}"
        targets = [self.place(label, j) for label, j in zip(sorted(self.net.post[transition]), sorted(involved))]
        self.copies[key] = name
        self.pi[name] = transition
        self.pre[name] = Marking.of(ordered)
        self.post[name] = Marking.of(targets)
        for j in involved:
            self.owned[j].add(name)
        return name

    def saturate(self) -> None:
        initial = Marking.of(self.place(label, j) for j, label in enumerate(self.tokens, start=1))
        self.initial = initial
        seen = {initial}
        queue = deque([initial])
        with tqdm(desc=f"distributing {self.net.name}", unit="marking", disable=not get_settings().progress) as bar:
            while queue:
                marking = queue.popleft()
                bar.update()
                for transition in sorted(self.net.transitions):
                    if not self.net.pre[transition]:
                        continue
                    for combo in _combinations(marking.support, self.net.pre[transition], self.pi):
                        name = self.copy(transition, combo)
                        successor = marking - self.pre[name] + self.post[name]
                        if successor not in seen:
                            if len(seen) >= self.state_cap:
                                raise BoundExceeded(self.state_cap, "markings")
                            seen.add(successor)
                            queue.append(successor)

    def close(self) -> None:
        """Give every member place a copy of each base transition leaving its label."""
        members = sorted(self.owned)
        changed = True
        while changed:
            changed = False
            for place in sorted(self.pi):
                if place not in self.member:
                    continue
                label, j = self.pi[place], self.member[place]
                for transition in sorted(self.net.postset(label)):
                    if any(self.pi[t] == transition for t in self.owned[j]):
                        continue
                    others = list(self.net.pre[transition] - Marking.of([label]))
                    partners = [m for m in members if m != j][:len(others)]
                    if len(partners) < len(others):
                        logging.warning(f"{transition} needs more tokens than {self.net.name} holds")
                        continue
                    combo = frozenset([place] + [self.place(q, m) for q, m in zip(sorted(others), partners)])
                    self.copy(transition, combo)
                    changed = True

    def members(self) -> list[SingularNet]:
        result = []
        for j in sorted(self.owned):
            places = frozenset(p for p, m in self.member.items() if m == j)
            transitions = frozenset(self.owned[j])
            net = PetriNet(
                places=places,
                transitions=transitions,
                pre={t: _restrict(self.pre[t], places) for t in transitions},
                post={t: _restrict(self.post[t], places) for t in transitions},
                initial=_restrict(self.initial, places),
                name=f"m{j}",
            )
            pi = {node: self.pi[node] for node in places | transitions}
            result.append(SingularNet(net, immutabledict(pi)))
        return result


def build_snd(net: PetriNet, state_cap: Optional[int] = None) -> SingularNetDistribution:
    """
    Distribute a concurrency-preserving net into one singular net per initial token.

    Copies are added for every combination of concurrently marked place copies that
    enables a base transition, until the composition's reachable markings stop producing
    new combinations. A closing pass adds never-enabled copies so that every member place
    covers the transitions leaving its label.

    Raises:
        NotConcurrencyPreserving: When some transition changes the number of tokens.
        BoundExceeded: When the composition has more than ``state_cap`` reachable markings.
    """
    if not is_concurrency_preserving(net):
        raise NotConcurrencyPreserving(f"{net.name} is not concurrency preserving")
    builder = _SndBuilder(net, resolve(state_cap, "state_cap"))
    builder.saturate()
    builder.close()
    members = builder.members()
    composition, pi = compose_snd(members, name=f"{net.name}.snd")
    logging.info(f"SND of {net.name} built OK ({len(members)} members, {len(composition.transitions)} copies)")
    return SingularNetDistribution(net, tuple(members), composition, pi)


def slices_to_snd(d: SliceDistribution) -> SingularNetDistribution:
    """The SND of a slice distribution: each slice labelled by the identity."""
    members = [
        SingularNet(s, immutabledict({node: node for node in s.places | s.transitions}))
        for s in d.slices
    ]
    composition, pi = compose_snd(members, name=d.base.name)
    return SingularNetDistribution(d.base, tuple(members), composition, pi)


def validate_snd(snd: SingularNetDistribution, state_cap: Optional[int] = None) -> DistributionReport:
    """
    Check the singular net clauses of every member and the distribution clauses of the
    composition.

    The maximality clause quantifies over reachable markings of the composition; when the
    state cap stops the fixpoint it is checked on the markings within the configured depth
    and the report is flagged ``bounded``.
    """
    base = snd.base
    report = DistributionReport(members=len(snd.nets))
    owner = {}
    for member in snd.nets:
        net, pi = member.net, member.pi
        for node in sorted(net.places | net.transitions):
            if node not in pi:
                report.add("sn-labels", f"{member.name}: {node} carries no label")
                continue
            expected = base.places if node in net.places else base.transitions
            if pi[node] not in expected:
                report.add("sn-labels", f"{member.name}: {node} is labelled by {pi[node]} of the wrong kind")
        if any(node not in pi for node in net.places | net.transitions):
            continue
        labels = [pi[p] for p in net.places]
        if len(set(labels)) != len(labels):
            report.add("sn-injective", f"{member.name} copies a place twice")
        if len(net.initial) != 1 or not base.initial.support >= {pi[p] for p in net.initial.support}:
            report.add("sn-initial", f"{member.name} has initial marking {net.initial}")
        covered = {pi[t] for t in net.transitions}
        for place in sorted(net.places):
            missing = base.postset(pi[place]) - covered
            if missing:
                report.add("sn-postset", f"{member.name}: no copy of {sorted(missing)} leaving {place}")
        for t in sorted(net.transitions):
            if len(net.pre[t]) != 1 or len(net.post[t]) != 1:
                report.add("sn-single-token", f"{member.name}: {t} has |pre|={len(net.pre[t])} |post|={len(net.post[t])}")
            for source in net.pre[t].support:
                if pi[source] not in base.pre[pi[t]]:
                    report.add("sn-flow", f"{member.name}: arc {source} -> {t} has no base counterpart")
            for target in net.post[t].support:
                if pi[target] not in base.post[pi[t]]:
                    report.add("sn-flow", f"{member.name}: arc {t} -> {target} has no base counterpart")
        for place in net.places:
            if place in owner:
                report.add("compatible-places", f"{place} belongs to {owner[place]} and {member.name}")
            owner.setdefault(place, member.name)
        for node, label in pi.items():
            if snd.pi.get(node) != label:
                report.add("compatible-labels", f"{node} is labelled {label} in {member.name} and {snd.pi.get(node)} in the family")
    if not report.valid:
        return report

    composition, pi = snd.composition, snd.pi
    image = Marking.of(pi[p] for p in composition.initial)
    if image != base.initial:
        report.add("snd-initial", f"initial marking maps to {image}, expected {base.initial}")
    seen = {}
    for t in sorted(composition.transitions):
        label = pi[t]
        if Marking.of(pi[p] for p in composition.pre[t]) != base.pre[label]:
            report.add("snd-structure", f"preset of {t} does not map onto the preset of {label}")
        if Marking.of(pi[p] for p in composition.post[t]) != base.post[label]:
            report.add("snd-structure", f"postset of {t} does not map onto the postset of {label}")
        key = (label, composition.pre[t])
        if key in seen:
            report.add("snd-injective", f"{seen[key]} and {t} share label {label} and preset")
        seen.setdefault(key, t)

    try:
        markings = reachable_markings(composition, state_cap=state_cap)
    except BoundExceeded as error:
        logging.warning(f"Maximality of {composition.name} checked on a bounded prefix: {error}")
        report.bounded = True
        markings = reachable_markings(composition, bound=resolve(None, "depth"))
    for marking in sorted(markings, key=str):
        for transition in sorted(base.transitions):
            if not base.pre[transition]:
                continue
            for combo in _combinations(marking.support, base.pre[transition], pi):
                if (transition, Marking.of(combo)) not in seen:
                    report.add("snd-maximal", f"no copy of {transition} on {sorted(combo)} in {marking}")
    return report


### ARCHITECTURE ###


def communication_graph(d) -> CommunicationGraph:
    """
    Members (or processes) joined by an edge whenever they share a transition (action).

    Accepts a ``SliceDistribution``, a ``SingularNetDistribution`` or a ``ControlGame``.
    """
    if isinstance(d, ControlGame):
        vertices = d.processes
        groups = [d.alphabet.domain(a) for a in sorted(d.alphabet.actions)]
    else:
        vertices = d.members
        owners = {}
        for member in d.members:
            for t in d.transitions_of(member):
                owners.setdefault(t, set()).add(member)
        groups = [sorted(owners[t]) for t in sorted(owners)]
    edges = {frozenset(pair) for group in groups for pair in combinations(group, 2)}
    return CommunicationGraph(tuple(vertices), frozenset(edges))


def acyclic_distribution_exists(net: PetriNet, strict: bool = False, search_cap: Optional[int] = None) -> bool:
    """
    True iff some distribution of ``net`` has an acyclic communication graph.

    Token partitions are searched by default so that nets which are not concurrency
    preserving are decided as well; ``strict`` restricts the search to slices.
    """
    for d in iter_slice_distributions(net, strict=strict, search_cap=search_cap):
        if communication_graph(d).is_acyclic:
            logging.info(f"Acyclic distribution of {net.name} found OK")
            return True
    return False


def system_processes(c: ControlGame) -> frozenset[str]:
    """Processes taking part in some controllable action."""
    return frozenset(p for a in c.controllable for p in c.alphabet.domain(a))


def single_system_process(c: ControlGame) -> bool:
    return len(system_processes(c)) <= 1


def in_acyclic_class(g: PetriGame, search_cap: Optional[int] = None) -> bool:
    """A reachability game whose net has a slice distribution with acyclic architecture."""
    if g.objective != Objective.REACHABILITY:
        return False
    return acyclic_distribution_exists(g.net, strict=True, search_cap=search_cap)
