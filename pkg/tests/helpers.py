"""Hand-built instances shared by several test modules."""
from mcpp.grid import Instance, grid_from_rows


def strip_instance() -> Instance:
    """Two robots on a unit-weight 6x2 strip, roots at the bottom of columns 0 and 3.

    Coverage trees that balance tree weight give makespan 8; splitting the strip
    into two 3x2 halves gives the optimum 6.
    """
    G = grid_from_rows(["......", "......"])
    return Instance(G, ((0, 0), (3, 0)))


# A 9-cell corridor where goal-by-goal chaining gets trapped but a wider goal
# window gets through.  Paths come from the single-loop splitter.
GADGET_ROWS = ["@...", "@...", "@@@.", "@@.."]
GADGET_ROOTS = ((2, 0), (1, 3))
GADGET_PATHS = [
    ((2, 0), (3, 0), (3, 1), (3, 2), (3, 3), (2, 3), (2, 2), (3, 2), (3, 1), (3, 0), (2, 0)),
    ((1, 3), (1, 2), (2, 2), (3, 2), (3, 1), (3, 0), (3, 1), (3, 2), (2, 2), (1, 2), (1, 3)),
]


def gadget_instance() -> Instance:
    return Instance(grid_from_rows(GADGET_ROWS), GADGET_ROOTS)


# -- timed planning cases -----------------------------------------------------------
def random_trajectory(rng, G, start, steps):
    """Random walk with random extra waits, as a trajectory starting at time 0."""
    from mcpp.deconflict import State
    v, t = start, 0.0
    out = [State(v, 0.0)]
    for _ in range(steps):
        u = rng.choice(G.neighbors(v))
        t += G.weight(v, u) + rng.choice([0, 0, 1, 2, 3])
        v = u
        out.append(State(v, t))
    return out


def goal_sequence_case(seed):
    """Integer-weight grid, a goal sequence and one or two foreign trajectories."""
    import random
    from oracles import random_connected_grid, with_random_weights
    rng = random.Random(seed)
    G = random_connected_grid(rng, rng.randint(4, 6), rng.randint(4, 6), rng.uniform(0.7, 1.0))
    G = with_random_weights(rng, G, 1, 3, integer=True)
    verts = sorted(G.vertices)
    start = rng.choice(verts)
    n = rng.randint(2, 6)
    goals = [start]
    while len(goals) < n:
        g = rng.choice(verts)
        if g != goals[-1]:
            goals.append(g)
    others = [random_trajectory(rng, G, rng.choice([v for v in verts if v != start]), rng.randint(2, 8))
              for _ in range(rng.randint(1, 2))]
    return G, goals, others


def oracle_horizon(ctx, goals, others):
    """Generous time bound: every foreign state is over and each leg can take thrice its length."""
    last = max([s.t for tau in others for s in tau] + [0.0])
    legs = sum(ctx.dist_to(b)[a] for a, b in zip(goals, goals[1:]))
    return int(last + 3 * legs + 20)


def desk_batch(n):
    """The first ``n`` generated deconfliction instances with single-loop paths."""
    from mcpp.baselines import single_tree_split
    from mcpp.bench import SOLVER_OPTIONS
    from mcpp.grid import full_grid
    from mcpp.mutation import GenerationError, generate_mutation
    out = []
    seed = 0
    while len(out) < n:
        w = 6 + seed % 10
        try:
            inst = generate_mutation(full_grid(w, w), 2 + seed % 4, seed % 10, seed)
        except GenerationError:
            seed += 1
            continue
        out.append((seed, inst, single_tree_split(inst, SOLVER_OPTIONS).paths))
        seed += 1
    return out
