"""Compress a Laplace sequence with adaptive levels and compare with ECSQ."""
import numpy as np

from mcmc_lossy import EncoderConfig, SourceSpec, decode_stream, encode_stream, generate
from mcmc_lossy.baselines import ecsq_curve, laplace_rd_curve

x = generate(SourceSpec.laplace(5000, seed=1))
print(f"{x.n} samples, empirical variance {x.empirical_variance:.3f}")

# one encode at a moderate slope; k = 2 is round(log_9(5000) / 2)
config = EncoderConfig(algorithm="adaptive", alphabet=9, beta=-1.0, c=2.0, r=30, k=2)
stream, point = encode_stream(x, config)
data = stream.to_bytes()
print(f"container {len(data)} bytes, {stream.header.effective} levels used")
print(f"net rate {point.rate:.3f} bits/sample, mse {point.distortion:.4f}, snr {point.snr_db:.2f} dB")

y = decode_stream(data)
assert np.isclose(np.mean((x.samples - y) ** 2), point.distortion)

# the same distortion with scalar quantization, and the Shannon bound
ecsq = ecsq_curve(x, np.geomspace(0.1, 8.0, 60))
bound = laplace_rd_curve(1.0, betas=-np.geomspace(0.4, 8.0, 8))
for curve in (ecsq, bound):
    r = curve.rate_at(point.distortion)
    print(f"{curve.label:>14}: {'n/a' if r is None else f'{r:.3f}'} bits/sample at the same mse")
