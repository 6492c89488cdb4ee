"""Regenerate the bundled example city under data/city/."""

import argparse
import datetime as dt
from pathlib import Path

import numpy as np

FACTORS = ["temperature", "humidity", "wind_speed", "pressure", "precipitation", "intervention"]


def covariates(rng, days):
    t = np.arange(days)
    temperature = 24 + 6 * np.sin(2 * np.pi * t / 120) + rng.normal(0, 1.5, days)
    humidity = np.clip(65 + 10 * np.cos(2 * np.pi * t / 45) + rng.normal(0, 5, days), 20, 100)
    wind_speed = np.abs(rng.gamma(3.0, 1.2, days))
    precipitation = rng.exponential(2.0, days) * (rng.random(days) < 0.35)
    pressure = 1012 + 4 * np.sin(2 * np.pi * t / 30) + rng.normal(0, 2, days)
    intervention = np.minimum(5, 1 + t // 20).astype(float)
    return np.column_stack([temperature, humidity, wind_speed, pressure, precipitation, intervention])


def rates(x):
    z = (x - x.mean(axis=0)) / x.std(axis=0)
    beta = 0.22 - 0.03 * z[:, 5] - 0.015 * z[:, 0] + 0.01 * z[:, 1] + 0.005 * z[:, 1] * z[:, 5]
    gamma = 0.16 + 0.01 * z[:, 2] - 0.01 * z[:, 4]
    return np.clip(beta, 0.05, 0.6), np.clip(gamma, 0.05, 0.4)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "city")
    parser.add_argument("--seed", type=int, default=2020)
    parser.add_argument("--days", type=int, default=90)
    parser.add_argument("--shift", type=int, default=11)
    parser.add_argument("--horizon", type=int, default=14)
    parser.add_argument("--population", type=float, default=500000.0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    total_cov = args.days - args.shift + args.horizon
    x = covariates(rng, total_cov)
    beta, gamma = rates(x)

    n = args.population
    i, r = 20.0, 0.0
    s = n - i - r
    counts = list(rng.poisson(15, args.shift))
    for t in range(args.days - args.shift):
        i_next = (1 + beta[t] - gamma[t]) * i - beta[t] * i * (i + r) / n
        r_next = r + gamma[t] * i
        s_next = n - i_next - r_next
        counts.append(int(rng.poisson(max(s - s_next, 0.0))))
        i, r, s = i_next, r_next, s_next

    start = dt.date(2020, 7, 1)
    date = lambda k: (start + dt.timedelta(days=k)).isoformat()
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "cases.csv", "w") as f:
        f.write("date,count\n")
        for k, c in enumerate(counts):
            f.write(f"{date(k)},{c}\n")

    def write_cov(path, rows):
        with open(path, "w") as f:
            f.write("date," + ",".join(FACTORS) + "\n")
            for k in rows:
                f.write(date(k) + "," + ",".join(f"{v:.4f}" for v in x[k]) + "\n")

    write_cov(args.out / "covariates.csv", range(args.days))
    write_cov(args.out / "future_covariates.csv", range(args.days - args.shift, total_cov))


if __name__ == "__main__":
    main()
