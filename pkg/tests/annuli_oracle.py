"""Independent reference implementation of the annuli construction.

Written as a literal, unoptimized transcription of the greedy procedure
(straight loops, no shared helpers with the library) so agreement between the
two is a meaningful check.
"""

import math


def oracle_plan(points, r0):
    zs = list(points)
    n = len(zs)
    all_annuli = []   # (center, s, r)
    chains = []
    for j in range(n):
        z = zs[j]
        later = zs[j + 1:]
        chain = []

        # first radius
        m = 1
        while 2.0 ** -m > r0:
            m += 1
        while True:
            r = 2.0 ** -m
            ok = z.imag >= 4.0 * r
            if ok:
                for (c, s_, r_) in all_annuli:
                    d = abs(z - c)
                    if not (d - 4.0 * r >= r_ or d + 4.0 * r <= s_):
                        ok = False
                        break
            if ok:
                for w in later:
                    d = abs(w - z)
                    if r / 4.0 <= d < 4.0 * r:
                        ok = False
                        break
            if ok:
                break
            m += 1
            if m > 900:
                raise RuntimeError("oracle: no first radius")
        r_cur = 2.0 ** -m

        while True:
            inside = [w for w in later if abs(w - z) < r_cur]
            if not inside:
                chain.append((0.0, r_cur))
                break
            d_max = max(abs(w - z) for w in inside)
            ms = 1
            while 2.0 ** -(ms + 1) > d_max:
                ms += 1
            s_tilde = 2.0 ** -ms
            s_cur = 2.0 * s_tilde
            chain.append((s_cur, r_cur))
            m2 = 1
            while True:
                r2 = 2.0 ** -m2
                ok = r2 < s_cur
                if ok:
                    for w in later:
                        d = abs(w - z)
                        if r2 / 4.0 <= d < 4.0 * r2:
                            ok = False
                            break
                if ok:
                    break
                m2 += 1
                if m2 > 900:
                    raise RuntimeError("oracle: no follow-up radius")
            r_cur = 2.0 ** -m2

        for (s_, r_) in chain:
            all_annuli.append((z, s_, r_))
        chains.append(tuple(chain))
    return tuple(chains)
