"""Print the experiment-level checks for every line of a grid file."""
import json
import sys

import numpy as np


def faas(d, key):
    return np.array([f for f, _ in d[key]])


def newest(d, key):
    return np.array([n for _, n in d[key]])


def checks(h, s):
    r = {}
    if h:
        full = faas(h, "base:full")
        r["mt>=full"] = bool(np.all(faas(h, "base:multitask") >= full))
        r["full-seq>=0.10"] = bool(np.all(full - faas(h, "base:sequential") >= 0.10))
        r["guid>replay"] = bool(np.all(faas(h, "base:guidance_only") > faas(h, "base:replay_only")))
        tags = [f"alpha_{a:g}:full" for a in (0.1, 0.2, 0.3, 0.4, 0.5)]
        means = [faas(h, t).mean() for t in tags]
        nt = [newest(h, t).mean() for t in tags]
        r["alpha spread"] = round(max(means) - min(means), 4)
        r["alpha=0.5 not dominant"] = not all(nt[-1] > x for x in nt[:-1])
    full = faas(s, "base:full")
    r["shift full>=guid,replay"] = bool(np.all(full >= faas(s, "base:guidance_only"))
                                        and np.all(full >= faas(s, "base:replay_only")))
    if h:
        gh = (faas(h, "base:guidance_only") - faas(h, "base:replay_only")).mean()
        gs = (faas(s, "base:guidance_only") - faas(s, "base:replay_only")).mean()
        r["gap h/s"] = (round(float(gh), 3), round(float(gs), 3), bool(gs < gh))
    dg = full.mean() - faas(s, "no_gate:full").mean()
    ds = full.mean() - faas(s, "no_scaling:full").mean()
    r["drop gate/scale"] = (round(float(dg), 4), round(float(ds), 4),
                            bool(dg > 0 and ds > 0 and dg > ds))
    return r


if __name__ == "__main__":
    homog = {}
    for line in open(sys.argv[1]):
        d = json.loads(line)
        key = (d["lr"], d["ep"], d["cap"])
        if d["h"]:
            homog[key] = d["h"]
        print(d["lr"], d["ep"], d["cap"], d["shift"], checks(homog.get(key), d["s"]))
