"""Architecture search by a halving genetic algorithm.

A population of R architectures (R a power of two) trains once each;
every generation pairs survivors uniformly at random (with replacement),
breeds two crossover children per pair, mutates children that outgrew
their shallower parent, trains the children, and keeps the fittest half
of parents plus children.  The population halves each generation until
one architecture remains, so a run trains exactly 3R - 2 models.

Fitness is the best validation MSE of the trained model; smaller is
better.  Failed training counts as a large finite fitness so the
individual loses every comparison but the bookkeeping stays sane.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .nn import (
    ACTIVATIONS,
    BATCH_CHOICES,
    EPOCH_MAX,
    EPOCH_MIN,
    MAX_LAYERS,
    NODE_CHOICES,
    Architecture,
)

FAILED_FITNESS = 1e30


@dataclass
class GaParams:
    population: int = 8
    seed: int = 0
    crossover_prob: float = 1.0
    mutation_prob: float = 1.0
    allow_self_pairing: bool = True

    def __post_init__(self):
        r = self.population
        if r < 2 or (r & (r - 1)) != 0:
            raise ValueError("population must be a power of two, at least 2")
        for name in ("crossover_prob", "mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass
class Individual:
    arch: Architecture
    lineage: int
    fitness: float | None = None


def _lineage_rng(seed, lineage):
    """Genome-operation stream owned by one individual."""
    return np.random.default_rng([seed, lineage, 0])


def training_seed(seed, lineage):
    """Seed for everything the trainer randomizes (init, shuffling)."""
    return [seed, lineage, 1]


def sample_architecture(rng):
    """Uniform draw over the whole search space."""
    depth = int(rng.integers(1, MAX_LAYERS + 1))
    epochs = int(rng.integers(EPOCH_MIN, EPOCH_MAX + 1))
    batch = int(rng.choice(np.asarray(BATCH_CHOICES)))
    layers = tuple(
        (int(rng.choice(np.asarray(NODE_CHOICES))), str(rng.choice(np.asarray(ACTIVATIONS))))
        for _ in range(depth)
    )
    return Architecture(epochs=epochs, batch_size=batch, layers=layers)


def crossover(a, b, rng):
    """Child drawing every field from a uniformly chosen parent.

    Layer i copies (nodes, activation) as a pair from parent p's layer i;
    where the child is deeper than p, p donates its last layer instead.
    """
    parents = (a, b)
    epochs = parents[rng.integers(2)].epochs
    batch = parents[rng.integers(2)].batch_size
    depth = parents[rng.integers(2)].depth
    layers = []
    for i in range(depth):
        p = parents[rng.integers(2)]
        layers.append(p.layers[min(i, p.depth - 1)])
    return Architecture(epochs=epochs, batch_size=batch, layers=tuple(layers))


def mutate(child, parent_depths, rng):
    """Permute layer order when the child outgrew its shallower parent.

    Node counts and activations are permuted independently, so the
    multiset of each is preserved while their pairing is reshuffled.
    Children no deeper than both parents come back unchanged.
    """
    if child.depth <= min(parent_depths):
        return child
    nodes = [n for n, _ in child.layers]
    acts = [act for _, act in child.layers]
    node_order = rng.permutation(child.depth)
    act_order = rng.permutation(child.depth)
    layers = tuple((nodes[i], acts[j]) for i, j in zip(node_order, act_order))
    return Architecture(epochs=child.epochs, batch_size=child.batch_size, layers=layers)


@dataclass
class GaReport:
    generations: list = field(default_factory=list)
    models_trained: int = 0
    winner_lineage: int = -1
    winner_fitness: float = math.inf
    winner_arch: dict | None = None
    elapsed_s: float = 0.0

    def to_dict(self):
        return {
            "generations": self.generations,
            "models_trained": self.models_trained,
            "winner_lineage": self.winner_lineage,
            "winner_fitness": self.winner_fitness,
            "winner_arch": self.winner_arch,
            "elapsed_s": self.elapsed_s,
        }


def _train_individual(ind, trainer, params):
    try:
        fitness = float(trainer(ind.arch, ind.lineage, training_seed(params.seed, ind.lineage)))
    except Exception:
        fitness = FAILED_FITNESS
    if not math.isfinite(fitness):
        fitness = FAILED_FITNESS
    ind.fitness = fitness


def evolve(params, trainer, progress=None):
    """Run the full halving schedule; returns (winner, report).

    trainer(arch, lineage, seed) -> validation fitness, lower is better.
    progress, when given, receives one line per trained model and per
    generation summary.
    """
    t0 = time.perf_counter()
    report = GaReport()

    population = []
    for lineage in range(params.population):
        arch = sample_architecture(_lineage_rng(params.seed, lineage))
        population.append(Individual(arch=arch, lineage=lineage))
    next_lineage = params.population

    generation = 0
    while True:
        for ind in population:
            if ind.fitness is None:
                _train_individual(ind, trainer, params)
                report.models_trained += 1
                if progress is not None:
                    progress(
                        f"gen {generation} lineage {ind.lineage}: "
                        f"fitness {ind.fitness:.6g} {ind.arch.to_dict()}"
                    )

        fits = sorted(ind.fitness for ind in population)
        best = min(population, key=lambda ind: (ind.fitness, ind.lineage))
        report.generations.append(
            {
                "index": generation,
                "size": len(population),
                "best_fitness": best.fitness,
                "best_lineage": best.lineage,
                "median_fitness": fits[len(fits) // 2],
            }
        )
        if progress is not None:
            progress(
                f"gen {generation}: size {len(population)}, best {best.fitness:.6g} "
                f"(lineage {best.lineage})"
            )
        if len(population) == 1:
            break

        pair_rng = np.random.default_rng([params.seed, generation])
        children = []
        for _ in range(len(population) // 2):
            i = int(pair_rng.integers(len(population)))
            j = int(pair_rng.integers(len(population)))
            if not params.allow_self_pairing:
                while j == i:
                    j = int(pair_rng.integers(len(population)))
            pa, pb = population[i].arch, population[j].arch
            for _ in range(2):
                lineage = next_lineage
                next_lineage += 1
                rng = _lineage_rng(params.seed, lineage)
                if rng.random() < params.crossover_prob:
                    child = crossover(pa, pb, rng)
                else:
                    child = (pa, pb)[rng.integers(2)]
                if child.depth > min(pa.depth, pb.depth) and rng.random() < params.mutation_prob:
                    child = mutate(child, (pa.depth, pb.depth), rng)
                children.append(Individual(arch=child, lineage=lineage))

        for ind in children:
            _train_individual(ind, trainer, params)
            report.models_trained += 1
            if progress is not None:
                progress(
                    f"gen {generation} lineage {ind.lineage}: "
                    f"fitness {ind.fitness:.6g} {ind.arch.to_dict()}"
                )

        pool = population + children
        pool.sort(key=lambda ind: (ind.fitness, ind.lineage))
        population = pool[: len(population) // 2]
        generation += 1

    winner = population[0]
    report.winner_lineage = winner.lineage
    report.winner_fitness = winner.fitness
    report.winner_arch = winner.arch.to_dict()
    report.elapsed_s = time.perf_counter() - t0
    return winner, report
