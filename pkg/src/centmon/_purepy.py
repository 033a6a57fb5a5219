"""Pure-Python twins of the compiled kernels, used when the extension is absent.

Masks are plain Python integers here instead of four 64-bit words.
"""

from __future__ import annotations


def block_search(cp, prefix=()):
    """Same contract as ``_kernel.block_search``, driven by a :class:`CompiledPlan`."""
    B = len(cp.positions)
    self_ok = cp.self_ok_int
    pair_ok = cp.pair_ok_int
    required, confirmed, exact = cp.required, cp.confirmed, cp.exact
    f = [0] * cp.n
    stats = dict(nodes=0, leaves=0, pruned=0, dead=0, covered=0, unsound=0)
    result: dict[int, int] = {}
    suffix = [1] * (B + 1)
    for d in range(B - 1, -1, -1):
        suffix[d] = suffix[d + 1] * len(cp.options[d])
    least = cp.least_tail

    def assign(d, opt, mask):
        for t, p in enumerate(cp.positions[d]):
            a = opt[t]
            f[p] = a
            mask &= self_ok[p][a]
            for j in cp.checks[d][t]:
                mask &= pair_ok[p][j][a][f[j]]
        return mask

    def record(mask):
        code = 0
        for v in f:
            code = code * cp.k + v
        old = result.get(mask)
        if old is None or code < old:
            result[mask] = code

    mask = cp.start
    for d, o in enumerate(prefix):
        mask = assign(d, cp.options[d][o], mask)
        if mask & required != required:
            stats["dead"] = 1
            return {}, stats

    def dfs(d, mask):
        for opt in cp.options[d]:
            stats["nodes"] += 1
            cur = assign(d, opt, mask)
            if cur & required != required:
                stats["dead"] += 1
                if exact:
                    stats["unsound"] += 1
                continue
            if d == B - 1:
                stats["leaves"] += 1
                stats["covered"] += 1
                record(cur)
                continue
            if exact and not cur & ~confirmed:
                stats["pruned"] += 1
                stats["covered"] += suffix[d + 1]
                saved = list(f)
                for p, v in least[d + 1]:
                    f[p] = v
                record(cur)
                f[:] = saved
                continue
            dfs(d + 1, cur)

    if len(prefix) < B:
        dfs(len(prefix), mask)
    else:
        stats["leaves"] = stats["covered"] = 1
        record(mask)
    return result, stats


def count_leaves(nopts) -> int:
    """Walk the tree of block choices; counts one at a time like the kernel."""
    nopts = list(nopts)
    if not nopts:
        return 1
    count = 0
    stack = [0]
    while stack:
        d = len(stack) - 1
        if stack[d] >= nopts[d]:
            stack.pop()
            if stack:
                stack[-1] += 1
            continue
        if d == len(nopts) - 1:
            count += nopts[d] - stack[d]
            stack[d] = nopts[d]
            continue
        stack.append(0)
    return count


def next_closure(rows: list[int], cols: list[int], n_attr: int, collect: bool):
    """Ganter's Next Closure on int bitsets; attribute i is bit i."""
    full = (1 << n_attr) - 1
    all_objects = (1 << len(rows)) - 1

    def close(attrs: int) -> int:
        ext = all_objects
        a = attrs
        while a:
            low = a & -a
            ext &= cols[low.bit_length() - 1]
            a ^= low
        out = full
        g = ext
        while g:
            low = g & -g
            out &= rows[low.bit_length() - 1]
            g ^= low
        return out

    A = close(0)
    count = 0
    intents = [] if collect else None
    while True:
        count += 1
        if collect:
            intents.append(A)
        for i in range(n_attr - 1, -1, -1):
            bit = 1 << i
            if A & bit:
                A ^= bit
                continue
            B = close(A | bit)
            if (B ^ A) & (bit - 1) == 0:
                A = B
                break
        else:
            return count, intents
