"""Observer error norms on the bundled example, and when each drops below thresholds.

Usage: python3 scripts/observer_convergence.py [--beta B] [--T T]
"""
import argparse

import numpy as np

from containsim.discovery import run_discovery
from containsim.observer import ObserverGains, ObserverNetwork
from containsim.scenario import load_packaged
from containsim.simulate import rk4_step

THRESHOLDS = (1e-1, 1e-2, 1e-3, 1e-4)


def simulate(net, omega0, T, h):
    nb, q, Q, m = net.n_blocks, net.q, net.Q, omega0.shape[0]
    eta, S_hat, D_hat = net.zeros()
    y = np.concatenate([omega0.ravel(), eta.ravel(), S_hat.ravel(), D_hat.ravel()])
    cuts = np.cumsum([0, m * q, nb * q, nb * q * q, nb * Q * q])

    def unpack(y):
        return (y[:cuts[1]].reshape(m, q), y[cuts[1]:cuts[2]].reshape(nb, q),
                y[cuts[2]:cuts[3]].reshape(nb, q, q), y[cuts[3]:].reshape(nb, Q, q))

    def f(t, y):
        om, e, S, D = unpack(y)
        d_om = np.einsum("kij,kj->ki", net.S_true, om)
        return np.concatenate([d_om.ravel(), *(a.ravel() for a in net.derivative(e, S, D, om))])

    steps = int(round(T / h))
    for k in range(steps + 1):
        yield k * h, unpack(y)
        if k < steps:
            y = rk4_step(f, k * h, y, h)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta", type=float, default=1.0, help="common observer gain")
    ap.add_argument("--T", type=float, default=20.0)
    ap.add_argument("--h", type=float, default=1e-3)
    args = ap.parse_args()

    s = load_packaged()
    d = run_discovery(s.graph)
    net = ObserverNetwork(s.graph, d, s.leaders, ObserverGains(args.beta, args.beta, args.beta))
    omega0 = np.stack([s.w0[l] for l in sorted(s.leaders)])
    idx = net.lam_idx
    first = {}
    at = {}
    for t, (om, eta, S_hat, D_hat) in simulate(net, omega0, args.T, args.h):
        norms = {"eta": float(np.linalg.norm(eta - om[idx])),
                 "S": float(np.linalg.norm(S_hat - net.S_true[idx])),
                 "D": float(np.linalg.norm(D_hat - net.D_true[idx]))}
        for kind, v in norms.items():
            for thr in THRESHOLDS:
                if v < thr:
                    first.setdefault((kind, thr), t)
        if abs(t - round(t)) < args.h / 2 and round(t) % 2 == 0:
            at[round(t)] = norms
    print(f"beta = {args.beta:g}, h = {args.h:g}")
    print("  t      |eta err|    |S err|      |D err|")
    for t, n in sorted(at.items()):
        print(f"{t:4d}   {n['eta']:.3e}   {n['S']:.3e}   {n['D']:.3e}")
    print("first time below threshold (stacked over all followers):")
    for kind in ("eta", "S", "D"):
        cells = [f"{thr:g}: {first[(kind, thr)]:.2f}" if (kind, thr) in first else f"{thr:g}: never"
                 for thr in THRESHOLDS]
        print(f"  {kind:3s}  " + ", ".join(cells))


if __name__ == "__main__":
    main()
