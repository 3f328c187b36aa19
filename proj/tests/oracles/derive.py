#!/usr/bin/env python3
# Copyright 2026 The SACC Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Independent reference values for the C++ test suite.

Everything here is recomputed from first principles with numpy/scipy and
written to frozen_values.hpp. Rerun after changing an instance definition:

    python3 tests/oracles/derive.py > tests/oracles/frozen_values.hpp
"""

import math

import numpy as np
from scipy import linalg, stats


LICENSE_HEADER = """\
/* Copyright 2026 The SACC Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
"""


def lognormal_histogram(loc, scale, max_size=64):
    centers = np.arange(1, max_size + 1, dtype=float)
    dist = stats.lognorm(s=scale, scale=math.exp(loc))
    probs = dist.cdf(centers + 0.5) - dist.cdf(centers - 0.5)
    return centers, probs / probs.sum()


def nearest_bin(centers, probs, size):
    # lower bin wins ties
    d = np.abs(centers - size)
    return probs[int(np.flatnonzero(d == d.min())[0])]


def scale_schedule(centers, probs, num_scales, beta1):
    betas = [beta1 / 2 ** s for s in range(num_scales)]
    raw = [nearest_bin(centers, probs, betas[num_scales - 1 - s]) for s in range(num_scales)]
    total = sum(raw)
    return betas, raw, [r / total for r in raw]


def n2(dx, dy, var):
    return np.exp(-(dx * dx + dy * dy) / (2 * var)) / (2 * math.pi * var)


def grid_coords(w, h):
    ys, xs = np.mgrid[0:h, 0:w]
    return xs.ravel().astype(float), ys.ravel().astype(float)


def moments(centers, w, h, alpha_s, beta, weight):
    xs, ys = grid_coords(w, h)
    J = xs.size
    mu = np.zeros(J)
    cov = np.zeros((J, J))
    dxx = xs[:, None] - xs[None, :]
    dyy = ys[:, None] - ys[None, :]
    sx = 0.5 * (xs[:, None] + xs[None, :])
    sy = 0.5 * (ys[:, None] + ys[None, :])
    for cx, cy in centers:
        mi = weight * n2(xs - cx, ys - cy, alpha_s + beta)
        mu += mi
        omega = n2(dxx, dyy, 2 * beta) * n2(sx - cx, sy - cy, beta / 2 + alpha_s)
        cov += weight ** 2 * omega - np.outer(mi, mi)
    return mu, cov


def select(var, threshold=0.8):
    var = np.where(var < 0, 0.0, var)
    order = sorted(range(var.size), key=lambda j: (-var[j], j))
    target = threshold * var.sum()
    cum, picked = 0.0, []
    for j in order:
        cum += var[j]
        picked.append(j)
        if cum > target:
            break
    return sorted(picked)


def emit(name, value):
    if isinstance(value, (list, tuple, np.ndarray)):
        body = ", ".join(f"{float(v):.17g}" for v in value)
        print(f"inline constexpr double {name}[] = {{{body}}};")
    else:
        print(f"inline constexpr double {name} = {float(value):.17g};")


def main():
    print(LICENSE_HEADER, end="")
    print("#pragma once")
    print("// Generated by derive.py; do not edit by hand.")
    print("namespace sacc::frozen {")

    # Log-normal head sizes, three scales.
    centers, probs = lognormal_histogram(math.log(8.0), 0.5)
    mean = float((centers * probs).sum())
    betas, raw, weights = scale_schedule(centers, probs, 3, mean)
    emit("kLogNormalMean", mean)
    emit("kLogNormalBetas", betas)
    emit("kLogNormalRawWeights", raw)
    emit("kLogNormalWeights", weights)
    _, _, w8 = scale_schedule(centers, probs, 3, 8.0)
    emit("kLogNormalWeightsBeta8", w8)

    # Noise variance estimate for alpha = 8 from 1e4 draws: 3 standard errors.
    n = 10_000
    emit("kNoiseVarianceHalfWidth", 3 * 8.0 * math.sqrt(2.0 / (n - 1)))

    # Unit-spaced quadrature of a variance-8 kernel on 200x200.
    xs, ys = grid_coords(200, 200)
    emit("kKernelQuadrature200", n2(xs - 100.0, ys - 100.0, 8.0).sum())

    # One head at the middle of a 40x40 grid with variance 4.
    xs, ys = grid_coords(40, 40)
    emit("kSingleHeadMassBeta4", n2(xs - 20.3, ys - 19.6, 4.0).sum())

    # Mixture mass per scale: one head at (32, 32) on 64x64, betas 8/4/2.
    masses = []
    for s, beta in enumerate([8.0, 4.0, 2.0]):
        d = 2 ** s
        w = math.ceil(64 / d)
        xs, ys = grid_coords(w, w)
        masses.append(n2(xs - 32.0 / d, ys - 32.0 / d, beta).sum())
    emit("kMixtureUnitMasses", masses)

    # Low-rank instance: diag(9, 4, 1) truncated to rank 2.
    emit("kDiagTruncationError", math.sqrt(1.0))

    # Quadratic form on a 15-pixel instance.
    rng = np.random.default_rng(15)
    G = rng.standard_normal((15, 15))
    A = G @ G.T
    d = rng.standard_normal(15)
    lam = 1e-3 * np.linalg.eigvalsh(A).max()
    emit("kNll15Matrix", A.ravel())
    emit("kNll15Residual", d)
    emit("kNll15Jitter", lam)
    emit("kNll15Value", d @ linalg.solve(A + lam * np.eye(15), d, assume_a="pos"))

    # Interpolation patches with the averaging kernel.
    patch = np.arange(1, 17, dtype=float).reshape(4, 4)
    down = 0.25 * (patch[:-1, :-1] + patch[:-1, 1:] + patch[1:, :-1] + patch[1:, 1:])
    emit("kInterpDownPatch", down.ravel())
    small = np.array([[1.0, 2.0], [3.0, 5.0]])
    up4 = np.kron(small, np.ones((2, 2)))
    up = 0.25 * (up4[:-1, :-1] + up4[:-1, 1:] + up4[1:, :-1] + up4[1:, 1:])
    emit("kInterpUpPatch", up.ravel())

    # Three-head, 16x16, three-scale loss instance.
    noisy = [(3.7, 11.2), (9.4, 4.9), (12.8, 13.3)]
    alpha, lbetas, lweights = 8.0, [8.0, 4.0, 2.0], [0.2, 0.5, 0.3]
    total_nll, total_reg, literal_reg = 0.0, 0.0, []
    nlls, regs = [], []
    for s in range(3):
        dv = 2 ** s
        gw = math.ceil(16 / dv)
        a_s = alpha / dv ** 2
        cs = [(x / dv, y / dv) for x, y in noisy]
        mu, cov = moments(cs, gw, gw, a_s, lbetas[s], lweights[s])
        J = gw * gw
        j = np.arange(J)
        pred = mu + 0.01 * lweights[s] * np.sin(0.7 * j + (s + 1))
        sel = select(np.diag(cov).copy())
        sub = cov[np.ix_(sel, sel)]
        sub = 0.5 * (sub + sub.T)
        jit = 1e-6 * np.abs(np.linalg.eigvalsh(sub)).max()
        dd = (pred - mu)[sel]
        nll = float(dd @ np.linalg.solve(sub + jit * np.eye(len(sel)), dd))
        xs, ys = grid_coords(gw, gw)
        phi = np.array([n2(xs - cx, ys - cy, lbetas[s]) for cx, cy in cs])
        assign = phi / (phi.sum(axis=0) + 1e-12)
        m = assign @ pred
        reg = float(np.abs(m / lweights[s] - 1).sum())
        literal_reg.append(float(np.abs(m - 1).sum()))
        nlls.append(nll)
        regs.append(reg)
        total_nll += nll
        total_reg += reg
    emit("kLossNll", nlls)
    emit("kLossReg", regs)
    emit("kLossLiteralReg", literal_reg)
    emit("kLossTotal", total_nll + total_reg)

    # Covariance of two heads on 6x6 at alpha = beta = 8, every entry.
    mu, cov = moments([(2.2, 3.1), (4.6, 1.4)], 6, 6, 8.0, 8.0, 1.0)
    emit("kCov6Mean", mu)
    emit("kCov6", cov.ravel())

    print("}  // namespace sacc::frozen")


if __name__ == "__main__":
    main()
