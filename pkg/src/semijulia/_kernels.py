"""Numba kernels: generic polynomial-map stepping and per-point classification.

Generators are flattened into term arrays (see ``pack_generators``) so one
compiled kernel serves every semigroup.  All kernels are ``nogil`` and pure
per point, which is what makes chunked threading bit-reproducible.
"""
from __future__ import annotations

import numpy as np
from numba import njit

FATOU_BOUNDED = 0
FATOU_ESCAPING = 1
JULIA = 2
UNDETERMINED = 3


def pack_generators(generators):
    """Flatten PolyMaps into ``(exps, coefs, ptr, maxdeg)`` arrays."""
    k = generators[0].k
    exps, coefs, ptr, maxdeg = [], [], [0], []
    for g in generators:
        md = 0
        for comp in g.components:
            for exp, c in sorted(comp.terms.items()):
                exps.append(exp)
                coefs.append(c)
                md = max(md, max(exp) if exp else 0)
            ptr.append(len(coefs))
        maxdeg.append(md)
    exps_arr = np.array(exps, dtype=np.int64).reshape(-1, k)
    return (exps_arr, np.array(coefs, dtype=np.complex128),
            np.array(ptr, dtype=np.int64), np.array(maxdeg, dtype=np.int64))


@njit(cache=True, nogil=True)
def step_map(z, out, pw, gen, exps, coefs, ptr, maxdeg):
    k = z.shape[0]
    md = maxdeg[gen]
    for v in range(k):
        pw[v, 0] = 1.0
        for e in range(1, md + 1):
            pw[v, e] = pw[v, e - 1] * z[v]
    for c in range(k):
        s = 0j
        for t in range(ptr[gen * k + c], ptr[gen * k + c + 1]):
            term = coefs[t]
            for v in range(k):
                e = exps[t, v]
                if e > 0:
                    term *= pw[v, e]
            s += term
        out[c] = s


@njit(cache=True, nogil=True)
def sup_norm(z):
    n = 0.0
    for v in range(z.shape[0]):
        a = abs(z[v])
        if not a <= n:  # propagates NaN
            n = a
    return n


@njit(cache=True, nogil=True)
def chordal(a, b):
    d2 = 0.0
    na = 0.0
    nb = 0.0
    for v in range(a.shape[0]):
        d2 += abs(a[v] - b[v]) ** 2
        na += abs(a[v]) ** 2
        nb += abs(b[v]) ** 2
    return np.sqrt(d2) / np.sqrt((1.0 + na) * (1.0 + nb))


@njit(cache=True, nogil=True)
def _run_single(e, gen, n_letters, tmp, pw, R, exps, coefs, ptr, maxdeg):
    """True iff ``gen`` applied ``n_letters`` times keeps ``e`` within R."""
    z = e.copy()
    for _ in range(n_letters):
        step_map(z, tmp, pw, gen, exps, coefs, ptr, maxdeg)
        for v in range(z.shape[0]):
            z[v] = tmp[v]
        if not sup_norm(z) <= R:
            return False
    return True


@njit(cache=True, nogil=True)
def _settled(e, gen_nondeg, probe_esc, n_probe, probe_len, tmp, pw, R,
             exps, coefs, ptr, maxdeg):
    for g in range(n_probe):
        if gen_nondeg[g] and probe_esc[g]:
            if not _run_single(e, g, probe_len, tmp, pw, R, exps, coefs, ptr, maxdeg):
                return False
    return True


@njit(cache=True, nogil=True)
def classify_block(points, offsets, seqs, seqlens, wlens, order, lcp,
                   word_nondeg, gen_nondeg, n_probe, probe_len, R, kappa,
                   window, early_exit, exps, coefs, ptr, maxdeg,
                   verdict, n_esc_out, n_bnd_out, max_sep_out, witness_out):
    """Classify each row of ``points``.

    Pass 1 walks the words in lexicographic order of their letter sequences
    (``order``; ``lcp`` is the common prefix with the previous word), reusing
    the trajectory state of the shared prefix.  Pass 2 applies the verdict
    rules in the original word order.  The first ``n_probe`` words must be
    the single generators; they double as probes for settledness.

    When only some trajectories of a word escape, the others get up to
    ``window`` more passes through the word, so that a
    crossing of ``R`` at the last letter does not read as a split.  Mixed
    fates in a word with a rank-degenerate letter are void: such a letter can
    pull a trajectory back after it passed ``R``.
    """
    P = points.shape[0]
    k = points.shape[1]
    C1 = offsets.shape[0] + 1
    W = seqs.shape[0]
    D = seqs.shape[1]
    R2 = R * R
    md = 1
    for g in range(maxdeg.shape[0]):
        if maxdeg[g] > md:
            md = maxdeg[g]
    pw = np.empty((k, md + 1), dtype=np.complex128)
    tmp = np.empty(k, dtype=np.complex128)
    states = np.empty((D + 1, C1, k), dtype=np.complex128)
    escs = np.zeros((D + 1, C1), dtype=np.int64)
    chord0 = np.empty(C1, dtype=np.float64)
    # per-word outcomes: 0 escaping, 1 bounded, 2 split
    kind = np.empty(W, dtype=np.int8)
    ragged = np.empty(W, dtype=np.bool_)
    center_esc = np.empty(W, dtype=np.bool_)
    ratio_w = np.empty(W, dtype=np.float64)
    endpoint = np.empty((W, k), dtype=np.complex128)
    probe_esc = np.zeros(n_probe, dtype=np.bool_)
    ext = np.empty(k, dtype=np.complex128)
    ext_esc = np.zeros(C1, dtype=np.int64)

    for p in range(P):
        for v in range(k):
            states[0, 0, v] = points[p, v]
        for j in range(1, C1):
            for v in range(k):
                states[0, j, v] = points[p, v] + offsets[j - 1, v]
            escs[0, j] = 0
        escs[0, 0] = 0
        for j in range(1, C1):
            chord0[j] = chordal(states[0, j], states[0, 0])
        for q in range(4):
            witness_out[p, q] = -1

        # ---- pass 1: outcomes ------------------------------------------
        computed = 0
        found_split = False
        n_done = 0
        for idx in range(W):
            w = order[idx]
            c = lcp[idx]
            if c > computed:
                c = computed
            n = seqlens[w]
            d = c
            # an all-escaped prefix decides the word
            alive = 0
            for j in range(C1):
                if escs[d, j] == 0:
                    alive += 1
            while d < n and alive > 0:
                g = seqs[w, d]
                for j in range(C1):
                    if escs[d, j] > 0:
                        escs[d + 1, j] = escs[d, j]
                        continue
                    step_map(states[d, j], tmp, pw, g, exps, coefs, ptr, maxdeg)
                    m2 = 0.0
                    for v in range(k):
                        states[d + 1, j, v] = tmp[v]
                        a2 = tmp[v].real * tmp[v].real + tmp[v].imag * tmp[v].imag
                        if not a2 <= m2:
                            m2 = a2
                    if not m2 <= R2:
                        escs[d + 1, j] = d + 1
                        alive -= 1
                    else:
                        escs[d + 1, j] = 0
                d += 1
            computed = d
            n_escaped = 0
            lo = 1 << 60
            hi = 0
            for j in range(C1):
                e = escs[d, j]
                if e > 0:
                    n_escaped += 1
                    if e < lo:
                        lo = e
                    if e > hi:
                        hi = e
            center_esc[w] = escs[d, 0] > 0
            ragged[w] = False
            ratio_w[w] = 0.0
            if n_escaped == C1:
                kind[w] = 0
                ragged[w] = hi - lo > window
            elif n_escaped == 0:
                r = 0.0
                for j in range(1, C1):
                    if chord0[j] > 0.0:
                        rr = chordal(states[d, j], states[d, 0]) / chord0[j]
                        if not rr <= r:
                            r = rr
                ratio_w[w] = r
                if not r <= kappa:
                    kind[w] = 2
                else:
                    kind[w] = 1
                for v in range(k):
                    endpoint[w, v] = states[d, 0, v]
            elif not word_nondeg[w]:
                kind[w] = 3
            else:
                # give the survivors a few more letters
                for j in range(C1):
                    ext_esc[j] = escs[d, j]
                    if ext_esc[j] > 0:
                        continue
                    for v in range(k):
                        ext[v] = states[d, j, v]
                    for t in range(window * wlens[w]):
                        g = seqs[w, (n + t) % wlens[w]]
                        step_map(ext, tmp, pw, g, exps, coefs, ptr, maxdeg)
                        m2 = 0.0
                        for v in range(k):
                            ext[v] = tmp[v]
                            a2 = tmp[v].real * tmp[v].real + tmp[v].imag * tmp[v].imag
                            if not a2 <= m2:
                                m2 = a2
                        if not m2 <= R2:
                            ext_esc[j] = n + t + 1
                            break
                all_out = True
                for j in range(C1):
                    e = ext_esc[j]
                    if e == 0:
                        all_out = False
                    elif e > hi:
                        hi = e
                if all_out:
                    kind[w] = 0
                    center_esc[w] = True
                    ragged[w] = hi - lo > window
                else:
                    kind[w] = 2
            n_done += 1
            if kind[w] == 2:
                found_split = True
                if early_exit:
                    break

        # ---- pass 2: verdict ---------------------------------------------
        if found_split and early_exit:
            nwit = 0
            n_esc = 0
            n_bnd = 0
            max_sep = 0.0
            for idx in range(n_done):
                w = order[idx]
                if center_esc[w]:
                    n_esc += 1
                else:
                    n_bnd += 1
                if kind[w] == 1 or kind[w] == 2:
                    if not ratio_w[w] <= max_sep:
                        max_sep = ratio_w[w]
                if kind[w] == 2 and nwit < 4:
                    witness_out[p, nwit] = w
                    nwit += 1
            verdict[p] = JULIA
            n_esc_out[p] = n_esc
            n_bnd_out[p] = n_bnd
            max_sep_out[p] = max_sep
            continue

        for g in range(n_probe):
            probe_esc[g] = kind[g] == 0
        any_split = False
        any_settled = False
        esc_nd_word = -1
        all_esc = True
        all_bnd = True
        any_ragged = False
        max_sep = 0.0
        n_esc = 0
        n_bnd = 0
        nwit = 0
        for w in range(W):
            if center_esc[w]:
                n_esc += 1
            else:
                n_bnd += 1
            kw = kind[w]
            if kw == 3:
                continue
            if kw == 0:
                all_bnd = False
                if ragged[w]:
                    any_ragged = True
                    all_esc = False
                if word_nondeg[w] and esc_nd_word < 0:
                    esc_nd_word = w
            else:
                all_esc = False
                if not ratio_w[w] <= max_sep:
                    max_sep = ratio_w[w]
                if kw == 2:
                    all_bnd = False
                    any_split = True
                    if nwit < 4:
                        witness_out[p, nwit] = w
                        nwit += 1
                elif word_nondeg[w] and not any_settled:
                    if _settled(endpoint[w], gen_nondeg, probe_esc, n_probe,
                                probe_len, tmp, pw, R, exps, coefs, ptr, maxdeg):
                        any_settled = True
                        if nwit < 4:
                            witness_out[p, nwit] = w
                            nwit += 1

        if any_split or (any_settled and esc_nd_word >= 0):
            if not any_split and nwit < 4:
                witness_out[p, nwit] = esc_nd_word
            verdict[p] = JULIA
        elif all_esc:
            verdict[p] = FATOU_ESCAPING
        elif all_bnd:
            verdict[p] = FATOU_BOUNDED
        elif not any_ragged and esc_nd_word >= 0:
            verdict[p] = FATOU_ESCAPING
        else:
            verdict[p] = UNDETERMINED
        n_esc_out[p] = n_esc
        n_bnd_out[p] = n_bnd
        max_sep_out[p] = max_sep


def trie_order(seqs, seqlens):
    """Lexicographic order of letter sequences and common-prefix lengths."""
    rows = [tuple(seqs[i, :seqlens[i]]) for i in range(len(seqlens))]
    order = sorted(range(len(rows)), key=lambda i: (rows[i], i))
    lcp = np.zeros(len(rows), dtype=np.int64)
    for idx in range(1, len(order)):
        a, b = rows[order[idx - 1]], rows[order[idx]]
        c = 0
        while c < len(a) and c < len(b) and a[c] == b[c]:
            c += 1
        lcp[idx] = c
    return np.array(order, dtype=np.int64), lcp
