"""Tree growth and traversal kernels.

Every kernel exists twice: ``*_nb`` (loops, compiled by numba) and ``*_np``
(vectorised numpy). Both scan candidates in the same order (feature index,
then threshold) with the same floating-point accumulation order, so they
grow the same trees.

Trees are flat arrays: ``feature`` (-1 marks a leaf), ``threshold``
(``x <= threshold`` goes left), ``left``, ``right``, ``value``, ``count``,
``gain``. Node 0 is the root.

Gradient statistics: node score is ``T(G)^2 / (H + lam)`` with ``T`` the
L1 soft threshold at ``alpha``; split gain is
``0.5 * (score_L + score_R - score_P) - min_gain``; leaf value is
``-T(G) / (H + lam)``.
"""
import numpy as np

from .._accel import active_backend, njit, splitmix64

# relative slack below which a gain is treated as rounding noise
GAIN_RTOL = 1e-12


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


@njit
def _soft_nb(G, alpha):
    if G > alpha:
        return G - alpha
    if G < -alpha:
        return G + alpha
    return 0.0


def _soft_np(G, alpha):
    return np.sign(G) * np.maximum(np.abs(G) - alpha, 0.0)


@njit
def _mix_nb(x):
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit
def _sample_features_nb(p, m_try, seed, node):
    if m_try >= p:
        return np.arange(p)
    base = _mix_nb(np.uint64(seed) ^ np.uint64(node))
    keys = np.empty(p, dtype=np.uint64)
    for f in range(p):
        keys[f] = _mix_nb(base + np.uint64(f))
    chosen = np.argsort(keys, kind="mergesort")[:m_try]
    return np.sort(chosen)


def sample_features(p, m_try, seed, node):
    """Candidate features for one node: the ``m_try`` smallest hash keys."""
    if m_try >= p:
        return np.arange(p)
    base = splitmix64(np.uint64(seed) ^ np.uint64(node))
    with np.errstate(over="ignore"):
        keys = splitmix64(base + np.arange(p, dtype=np.uint64))
    return np.sort(np.argsort(keys, kind="stable")[:m_try])


def presort(Xr):
    """Per-feature stable argsort of the training rows, shape (p, m)."""
    return np.ascontiguousarray(np.argsort(Xr, axis=0, kind="stable").T.astype(np.int64))


# ---------------------------------------------------------------------------
# exact greedy growth (breadth first, so depth-limited growth is level-wise)
# ---------------------------------------------------------------------------


@njit
def _grow_exact_nb(Xr, order, g, h, max_depth, min_split, min_leaf, lam, alpha, min_gain, m_try, seed):
    m, p = Xr.shape
    cap = 2 * m + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)
    gain = np.zeros(cap)
    start = np.zeros(cap, dtype=np.int64)
    end = np.zeros(cap, dtype=np.int64)
    depth = np.zeros(cap, dtype=np.int64)

    pos = np.arange(m)
    leaf_of = np.empty(m, dtype=np.int64)
    go_left = np.zeros(m, dtype=np.bool_)
    buf = np.empty(m, dtype=np.int64)

    end[0] = m
    n_nodes = 1
    node = 0
    while node < n_nodes:
        s = start[node]
        e = end[node]
        n = e - s
        G = 0.0
        H = 0.0
        for k in range(s, e):
            G += g[pos[k]]
            H += h[pos[k]]
        TG = _soft_nb(G, alpha)
        value[node] = -TG / (H + lam)
        count[node] = n

        best_f = -1
        best_thr = 0.0
        best_gain = -np.inf
        best_raw = 0.0
        best_scale = 0.0
        if (max_depth < 0 or depth[node] < max_depth) and n >= min_split and n >= 2 * min_leaf:
            score_p = TG * TG / (H + lam)
            feats = _sample_features_nb(p, m_try, seed, node)
            for fi in range(feats.shape[0]):
                f = feats[fi]
                GL = 0.0
                HL = 0.0
                for k in range(s, e - 1):
                    i = order[f, k]
                    GL += g[i]
                    HL += h[i]
                    nl = k - s + 1
                    xv = Xr[i, f]
                    xn = Xr[order[f, k + 1], f]
                    if not xn > xv:
                        continue
                    if nl < min_leaf:
                        continue
                    if n - nl < min_leaf:
                        break
                    tl = _soft_nb(GL, alpha)
                    tr = _soft_nb(G - GL, alpha)
                    sl = tl * tl / (HL + lam)
                    sr = tr * tr / ((H - HL) + lam)
                    raw = 0.5 * ((sl + sr) - score_p)
                    gn = raw - min_gain
                    if gn > best_gain:
                        best_gain = gn
                        best_f = f
                        thr = 0.5 * (xv + xn)
                        if thr >= xn:
                            thr = xv
                        best_thr = thr
                        best_raw = raw
                        best_scale = (sl + sr) + score_p

        if best_f >= 0 and best_gain > 0.0 and best_raw > GAIN_RTOL * best_scale:
            feature[node] = best_f
            threshold[node] = best_thr
            gain[node] = best_raw
            nl = 0
            for k in range(s, e):
                i = pos[k]
                gl = Xr[i, best_f] <= best_thr
                go_left[i] = gl
                if gl:
                    nl += 1
            # stable partition of the position list and every sorted order
            a = 0
            b = nl
            for k in range(s, e):
                i = pos[k]
                if go_left[i]:
                    buf[a] = i
                    a += 1
                else:
                    buf[b] = i
                    b += 1
            for k in range(n):
                pos[s + k] = buf[k]
            for f in range(p):
                a = 0
                b = nl
                for k in range(s, e):
                    i = order[f, k]
                    if go_left[i]:
                        buf[a] = i
                        a += 1
                    else:
                        buf[b] = i
                        b += 1
                for k in range(n):
                    order[f, s + k] = buf[k]
            lc = n_nodes
            rc = n_nodes + 1
            n_nodes += 2
            left[node] = lc
            right[node] = rc
            start[lc] = s
            end[lc] = s + nl
            start[rc] = s + nl
            end[rc] = e
            depth[lc] = depth[node] + 1
            depth[rc] = depth[node] + 1
        else:
            for k in range(s, e):
                leaf_of[pos[k]] = node
        node += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        count[:n_nodes].copy(),
        gain[:n_nodes].copy(),
        leaf_of,
    )


def _seq_sum(a):
    # left-to-right summation, matching the compiled loops
    return float(np.cumsum(a)[-1]) if a.size else 0.0


def _grow_exact_np(Xr, order, g, h, max_depth, min_split, min_leaf, lam, alpha, min_gain, m_try, seed):
    m, p = Xr.shape
    feature, threshold, left, right, value, count, gain = [], [], [], [], [], [], []
    leaf_of = np.empty(m, dtype=np.int64)
    queue = [(np.arange(m), 0)]
    node = 0
    while node < len(queue):
        pos, depth = queue[node]
        n = pos.size
        G = _seq_sum(g[pos])
        H = _seq_sum(h[pos])
        TG = float(_soft_np(G, alpha))
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(-TG / (H + lam))
        count.append(n)
        gain.append(0.0)

        split = None
        if (max_depth < 0 or depth < max_depth) and n >= min_split and n >= 2 * min_leaf:
            score_p = TG * TG / (H + lam)
            feats = sample_features(p, m_try, seed, node)
            xs = Xr[np.ix_(pos, feats)]
            o = np.argsort(xs, axis=0, kind="stable")
            xs = np.take_along_axis(xs, o, axis=0)
            GL = np.cumsum(g[pos][o], axis=0)[:-1]
            HL = np.cumsum(h[pos][o], axis=0)[:-1]
            nl = np.arange(1, n)[:, None]
            ok = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & (n - nl >= min_leaf)
            tl = _soft_np(GL, alpha)
            tr = _soft_np(G - GL, alpha)
            sl = tl * tl / (HL + lam)
            sr = tr * tr / ((H - HL) + lam)
            raw = 0.5 * ((sl + sr) - score_p)
            gn = np.where(ok, raw - min_gain, -np.inf)
            flat = gn.T.ravel()  # feature-major scan order
            if flat.size:
                b = int(np.argmax(flat))
                fi, k = divmod(b, n - 1)
                if np.isfinite(flat[b]) and flat[b] > 0.0 and raw[k, fi] > GAIN_RTOL * ((sl[k, fi] + sr[k, fi]) + score_p):
                    xv, xn = xs[k, fi], xs[k + 1, fi]
                    thr = 0.5 * (xv + xn)
                    if thr >= xn:
                        thr = xv
                    split = (int(feats[fi]), float(thr), float(raw[k, fi]))

        if split is None:
            leaf_of[pos] = node
        else:
            f, thr, rg = split
            feature[node] = f
            threshold[node] = thr
            gain[node] = rg
            mask = Xr[pos, f] <= thr
            left[node] = len(queue)
            right[node] = len(queue) + 1
            queue.append((pos[mask], depth + 1))
            queue.append((pos[~mask], depth + 1))
        node += 1

    return (
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
        np.array(count, dtype=np.int64),
        np.array(gain, dtype=np.float64),
        leaf_of,
    )


# ---------------------------------------------------------------------------
# histogram leaf-wise growth
# ---------------------------------------------------------------------------


@njit
def _hist_best_nb(hist, nbins, G, H, n, min_leaf, lam, alpha, min_gain):
    p = hist.shape[0]
    TG = _soft_nb(G, alpha)
    score_p = TG * TG / (H + lam)
    best_f = -1
    best_b = -1
    best_gain = -np.inf
    best_raw = 0.0
    best_scale = 0.0
    for f in range(p):
        GL = 0.0
        HL = 0.0
        CL = 0.0
        for b in range(nbins[f] - 1):
            GL += hist[f, b, 0]
            HL += hist[f, b, 1]
            CL += hist[f, b, 2]
            if CL < min_leaf or n - CL < min_leaf:
                continue
            tl = _soft_nb(GL, alpha)
            tr = _soft_nb(G - GL, alpha)
            sl = tl * tl / (HL + lam)
            sr = tr * tr / ((H - HL) + lam)
            raw = 0.5 * ((sl + sr) - score_p)
            gn = raw - min_gain
            if gn > best_gain:
                best_gain = gn
                best_f = f
                best_b = b
                best_raw = raw
                best_scale = (sl + sr) + score_p
    if best_f < 0 or not (best_gain > 0.0) or not (best_raw > GAIN_RTOL * best_scale):
        return -1, -1, -np.inf, 0.0
    return best_f, best_b, best_gain, best_raw


@njit
def _grow_hist_nb(codes, nbins, cuts, g, h, max_leaves, max_depth, min_leaf, lam, alpha, min_gain):
    m, p = codes.shape
    maxb = cuts.shape[1] + 1
    cap = 2 * max_leaves
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)
    gain = np.zeros(cap)
    start = np.zeros(cap, dtype=np.int64)
    end = np.zeros(cap, dtype=np.int64)
    depth = np.zeros(cap, dtype=np.int64)
    sumG = np.zeros(cap)
    sumH = np.zeros(cap)
    slot = np.full(cap, -1, dtype=np.int64)
    cand_f = np.full(cap, -1, dtype=np.int64)
    cand_b = np.full(cap, -1, dtype=np.int64)
    cand_gain = np.full(cap, -np.inf)
    cand_raw = np.zeros(cap)
    hist = np.zeros((max_leaves, p, maxb, 3))
    pos = np.arange(m)
    buf = np.empty(m, dtype=np.int64)
    leaf_of = np.empty(m, dtype=np.int64)

    end[0] = m
    G = 0.0
    H = 0.0
    for k in range(m):
        G += g[k]
        H += h[k]
    sumG[0] = G
    sumH[0] = H
    count[0] = m
    slot[0] = 0
    for k in range(m):
        for f in range(p):
            b = codes[k, f]
            hist[0, f, b, 0] += g[k]
            hist[0, f, b, 1] += h[k]
            hist[0, f, b, 2] += 1.0
    if max_depth != 0 and m >= 2 * min_leaf:
        cf, cb, cg, cr = _hist_best_nb(hist[0], nbins, G, H, m, min_leaf, lam, alpha, min_gain)
        cand_f[0] = cf
        cand_b[0] = cb
        cand_gain[0] = cg
        cand_raw[0] = cr
    n_nodes = 1
    n_leaves = 1
    next_slot = 1

    while n_leaves < max_leaves:
        node = -1
        bg = -np.inf
        for j in range(n_nodes):
            if feature[j] < 0 and cand_f[j] >= 0 and cand_gain[j] > bg:
                bg = cand_gain[j]
                node = j
        if node < 0:
            break
        f = cand_f[node]
        b = cand_b[node]
        s = start[node]
        e = end[node]
        a = s
        for k in range(s, e):
            if codes[pos[k], f] <= b:
                buf[a] = pos[k]
                a += 1
        nl = a - s
        for k in range(s, e):
            if codes[pos[k], f] > b:
                buf[a] = pos[k]
                a += 1
        for k in range(s, e):
            pos[k] = buf[k]

        feature[node] = f
        threshold[node] = cuts[f, b]
        gain[node] = cand_raw[node]
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        start[lc] = s
        end[lc] = s + nl
        start[rc] = s + nl
        end[rc] = e
        depth[lc] = depth[node] + 1
        depth[rc] = depth[node] + 1
        for c in (lc, rc):
            Gc = 0.0
            Hc = 0.0
            for k in range(start[c], end[c]):
                Gc += g[pos[k]]
                Hc += h[pos[k]]
            sumG[c] = Gc
            sumH[c] = Hc
            count[c] = end[c] - start[c]

        # build the smaller child directly, derive the larger by subtraction
        if count[lc] <= count[rc]:
            small = lc
            large = rc
        else:
            small = rc
            large = lc
        ps = slot[node]
        ss = next_slot
        next_slot += 1
        slot[small] = ss
        slot[large] = ps
        hist[ss] = 0.0
        for k in range(start[small], end[small]):
            i = pos[k]
            for ff in range(p):
                bb = codes[i, ff]
                hist[ss, ff, bb, 0] += g[i]
                hist[ss, ff, bb, 1] += h[i]
                hist[ss, ff, bb, 2] += 1.0
        for ff in range(p):
            for bb in range(maxb):
                for t in range(3):
                    hist[ps, ff, bb, t] -= hist[ss, ff, bb, t]
        slot[node] = -1
        n_leaves += 1

        for c in (lc, rc):
            if (max_depth < 0 or depth[c] < max_depth) and count[c] >= 2 * min_leaf:
                cf, cb, cg, cr = _hist_best_nb(
                    hist[slot[c]], nbins, sumG[c], sumH[c], count[c], min_leaf, lam, alpha, min_gain
                )
                cand_f[c] = cf
                cand_b[c] = cb
                cand_gain[c] = cg
                cand_raw[c] = cr

    for j in range(n_nodes):
        value[j] = -_soft_nb(sumG[j], alpha) / (sumH[j] + lam)
        if feature[j] < 0:
            for k in range(start[j], end[j]):
                leaf_of[pos[k]] = j

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        count[:n_nodes].copy(),
        gain[:n_nodes].copy(),
        leaf_of,
    )


def _hist_np(codes, g, h, maxb):
    m, p = codes.shape
    idx = (codes.astype(np.int64) + np.arange(p) * maxb).ravel()
    size = p * maxb
    out = np.empty((p, maxb, 3))
    out[:, :, 0] = np.bincount(idx, weights=np.repeat(g, p), minlength=size).reshape(p, maxb)
    out[:, :, 1] = np.bincount(idx, weights=np.repeat(h, p), minlength=size).reshape(p, maxb)
    out[:, :, 2] = np.bincount(idx, minlength=size).reshape(p, maxb)
    return out


def _hist_best_np(hist, nbins, G, H, n, min_leaf, lam, alpha, min_gain):
    p, maxb, _ = hist.shape
    TG = float(_soft_np(G, alpha))
    score_p = TG * TG / (H + lam)
    cum = np.cumsum(hist, axis=1)[:, :-1]  # split after bin b, b = 0..maxb-2
    GL, HL, CL = cum[..., 0], cum[..., 1], cum[..., 2]
    ok = (np.arange(maxb - 1)[None, :] < (nbins[:, None] - 1)) & (CL >= min_leaf) & (n - CL >= min_leaf)
    tl = _soft_np(GL, alpha)
    tr = _soft_np(G - GL, alpha)
    sl = tl * tl / (HL + lam)
    sr = tr * tr / ((H - HL) + lam)
    raw = 0.5 * ((sl + sr) - score_p)
    gn = np.where(ok, raw - min_gain, -np.inf).ravel()
    if gn.size == 0:
        return -1, -1, -np.inf, 0.0
    k = int(np.argmax(gn))
    f, b = divmod(k, maxb - 1)
    if not (np.isfinite(gn[k]) and gn[k] > 0.0 and raw[f, b] > GAIN_RTOL * ((sl[f, b] + sr[f, b]) + score_p)):
        return -1, -1, -np.inf, 0.0
    return f, b, float(gn[k]), float(raw[f, b])


def _grow_hist_np(codes, nbins, cuts, g, h, max_leaves, max_depth, min_leaf, lam, alpha, min_gain):
    m, p = codes.shape
    maxb = cuts.shape[1] + 1
    nodes = []  # dicts: pos, depth, G, H, hist, cand

    def make(pos, depth, hist):
        G = _seq_sum(g[pos])
        H = _seq_sum(h[pos])
        nd = {"pos": pos, "depth": depth, "G": G, "H": H, "hist": hist, "feature": -1, "threshold": 0.0,
              "left": -1, "right": -1, "gain": 0.0, "cand": (-1, -1, -np.inf, 0.0)}
        if (max_depth < 0 or depth < max_depth) and pos.size >= 2 * min_leaf:
            nd["cand"] = _hist_best_np(hist, nbins, G, H, pos.size, min_leaf, lam, alpha, min_gain)
        nodes.append(nd)
        return nd

    root_pos = np.arange(m)
    make(root_pos, 0, _hist_np(codes, g, h, maxb))
    n_leaves = 1
    while n_leaves < max_leaves:
        best, bg = -1, -np.inf
        for j, nd in enumerate(nodes):
            if nd["feature"] < 0 and nd["cand"][0] >= 0 and nd["cand"][2] > bg:
                best, bg = j, nd["cand"][2]
        if best < 0:
            break
        nd = nodes[best]
        f, b, _, raw = nd["cand"]
        pos = nd["pos"]
        mask = codes[pos, f] <= b
        lp, rp = pos[mask], pos[~mask]
        small_left = lp.size <= rp.size
        sp = lp if small_left else rp
        hs = _hist_np(codes[sp], g[sp], h[sp], maxb)
        hl = nd["hist"] - hs
        nd.update(feature=f, threshold=float(cuts[f, b]), gain=raw, hist=None)
        nd["left"], nd["right"] = len(nodes), len(nodes) + 1
        if small_left:
            make(lp, nd["depth"] + 1, hs)
            make(rp, nd["depth"] + 1, hl)
        else:
            make(lp, nd["depth"] + 1, hl)
            make(rp, nd["depth"] + 1, hs)
        n_leaves += 1

    leaf_of = np.empty(m, dtype=np.int64)
    for j, nd in enumerate(nodes):
        if nd["feature"] < 0:
            leaf_of[nd["pos"]] = j
    value = np.array([-float(_soft_np(nd["G"], alpha)) / (nd["H"] + lam) for nd in nodes])
    return (
        np.array([nd["feature"] for nd in nodes], dtype=np.int64),
        np.array([nd["threshold"] for nd in nodes], dtype=np.float64),
        np.array([nd["left"] for nd in nodes], dtype=np.int64),
        np.array([nd["right"] for nd in nodes], dtype=np.int64),
        value,
        np.array([nd["pos"].size for nd in nodes], dtype=np.int64),
        np.array([nd["gain"] for nd in nodes], dtype=np.float64),
        leaf_of,
    )


def make_bins(Xr, max_bins):
    """Per-feature cut points; a value's bin is the number of cuts below it.

    Features with at most ``max_bins`` distinct values get a cut midway
    between each pair of neighbours (exact); others use quantile cuts.
    Returns ``(cuts, nbins)`` with ``cuts`` padded by +inf to a rectangle.
    """
    m, p = Xr.shape
    per = []
    for j in range(p):
        u = np.unique(Xr[:, j])
        if u.size <= max_bins:
            c = 0.5 * (u[:-1] + u[1:])
            c = np.where(c >= u[1:], u[:-1], c)
        else:
            q = np.quantile(Xr[:, j], np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
            c = np.unique(q)
        per.append(c)
    width = max(max_bins - 1, 1)
    cuts = np.full((p, width), np.inf)
    nbins = np.empty(p, dtype=np.int64)
    for j, c in enumerate(per):
        cuts[j, : c.size] = c
        nbins[j] = c.size + 1
    return cuts, nbins


def bin_codes(X, cuts, nbins):
    n, p = X.shape
    codes = np.empty((n, p), dtype=np.uint8)
    for j in range(p):
        codes[:, j] = np.searchsorted(cuts[j, : nbins[j] - 1], X[:, j], side="left")
    return codes


# ---------------------------------------------------------------------------
# traversal
# ---------------------------------------------------------------------------


@njit
def _apply_nb(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


def _apply_np(X, feature, threshold, left, right):
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    active = np.flatnonzero(feature[node] >= 0)
    while active.size:
        nd = node[active]
        go = X[active, feature[nd]] <= threshold[nd]
        node[active] = np.where(go, left[nd], right[nd])
        active = active[feature[node[active]] >= 0]
    return node


@njit
def _accumulate_nb(X, out, scale, features, thresholds, lefts, rights, values, offsets):
    # out += scale * tree_t(X) for each packed tree, tree by tree
    n = X.shape[0]
    for t in range(offsets.shape[0] - 1):
        o = offsets[t]
        for i in range(n):
            node = 0
            while features[o + node] >= 0:
                if X[i, features[o + node]] <= thresholds[o + node]:
                    node = lefts[o + node]
                else:
                    node = rights[o + node]
            out[i] = out[i] + scale * values[o + node]
    return out


def _accumulate_np(X, out, scale, features, thresholds, lefts, rights, values, offsets):
    for t in range(offsets.shape[0] - 1):
        a, b = offsets[t], offsets[t + 1]
        leaf = _apply_np(X, features[a:b], thresholds[a:b], lefts[a:b], rights[a:b])
        out = out + scale * values[a:b][leaf]
    return out


BACKENDS = {
    "numba": {"grow_exact": _grow_exact_nb, "grow_hist": _grow_hist_nb, "apply": _apply_nb, "accumulate": _accumulate_nb},
    "numpy": {"grow_exact": _grow_exact_np, "grow_hist": _grow_hist_np, "apply": _apply_np, "accumulate": _accumulate_np},
}


def kernels():
    return BACKENDS[active_backend()]
