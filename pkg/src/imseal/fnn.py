"""Feed-forward 4-10-10-2 classifier with Levenberg-Marquardt training.

The receiver regenerates the watermark bits from the key, trains on one half
of the block features (2x2 DCT coefficients of the diagonal sub-band) and
predicts the opposite half; four such runs (top, bottom, left, right) give
two predictions per block which are averaged before thresholding.
"""

from dataclasses import dataclass, field

import numpy as np

from .transforms import block_dct2

__all__ = [
    "Network", "TrainConfig", "TrainResult", "ExtractionResult",
    "init_network", "forward", "forward_batch", "mse_loss", "loss_gradient",
    "train_lm", "extract_watermark", "block_features",
]

LAYER_SIZES = (4, 10, 10, 2)


@dataclass
class Network:
    """Weights W[l] (out, in) and biases beta[l]; psi = W x - beta per layer."""

    weights: list
    biases: list
    gain: float = 1.0

    def copy(self):
        return Network([w.copy() for w in self.weights],
                       [b.copy() for b in self.biases], self.gain)

    @property
    def n_params(self):
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def pack(self):
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    def unpack(self, theta):
        i = 0
        for w, b in zip(self.weights, self.biases):
            w[...] = theta[i:i + w.size].reshape(w.shape); i += w.size
            b[...] = theta[i:i + b.size]; i += b.size


def init_network(seed: int = 0, sizes=LAYER_SIZES, gain: float = 1.0) -> Network:
    """Uniform [-0.5, 0.5] initialization from a fixed seed."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.uniform(-0.5, 0.5, size=(n_out, n_in)))
        biases.append(rng.uniform(-0.5, 0.5, size=n_out))
    return Network(weights, biases, gain)


def _sigmoid(z, gain):
    return 1.0 / (1.0 + np.exp(-gain * np.clip(z, -500 / gain, 500 / gain)))


def forward_batch(net: Network, x: np.ndarray):
    """Outputs and hidden activations for a batch of rows."""
    h = np.asarray(x, dtype=np.float64)
    hidden = []
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T - b
        h = z if i == last else _sigmoid(z, net.gain)
        if i != last:
            hidden.append(h)
    return h, hidden


def forward(net: Network, x) -> np.ndarray:
    """Single input vector to output vector."""
    y, _ = forward_batch(net, np.asarray(x, dtype=np.float64)[None])
    return y[0]


def mse_loss(net: Network, x, targets) -> float:
    y, _ = forward_batch(net, x)
    return float(np.mean((y - targets) ** 2))


def _output_jacobian(net: Network, x):
    """Per-sample Jacobian of both outputs wrt all parameters: (N*2, P)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    y, (h1, h2) = forward_batch(net, x)
    w2, w3 = net.weights[1], net.weights[2]
    g = net.gain
    p = net.n_params
    jac = np.empty((n, 2, p))
    d1 = g * h1 * (1 - h1)
    d2 = g * h2 * (1 - h2)
    for k in range(2):
        g2 = w3[k][None, :] * d2                       # N x 10
        g1 = (g2 @ w2) * d1                            # N x 10
        dw1 = g1[:, :, None] * x[:, None, :]           # N x 10 x 4
        dw2 = g2[:, :, None] * h1[:, None, :]          # N x 10 x 10
        dw3 = np.zeros((n, 2, h2.shape[1]))
        dw3[:, k, :] = h2
        db3 = np.zeros((n, 2))
        db3[:, k] = -1.0
        jac[:, k, :] = np.concatenate([
            dw1.reshape(n, -1), -g1,
            dw2.reshape(n, -1), -g2,
            dw3.reshape(n, -1), db3,
        ], axis=1)
    return jac.reshape(n * 2, p), y


def loss_gradient(net: Network, x, targets) -> np.ndarray:
    """Analytic gradient of mse_loss wrt the packed parameter vector."""
    jac, y = _output_jacobian(net, x)
    r = (y - np.asarray(targets, dtype=np.float64)).reshape(-1)
    return 2.0 * (jac.T @ r) / r.size


@dataclass
class TrainConfig:
    max_epochs: int = 100
    goal_mse: float = 1e-3
    lambda0: float = 1e-2
    lambda_max: float = 1e10
    plateau_epochs: int = 8
    plateau_rel: float = 1e-5
    restarts: int = 1


@dataclass
class TrainResult:
    net: Network
    mse: float
    epochs: int
    aborted: bool = False
    stop_reason: str = ""


def _train_once(net: Network, x, targets, cfg: TrainConfig) -> TrainResult:
    theta = net.pack()
    lam = cfg.lambda0
    cur = mse_loss(net, x, targets)
    if not np.isfinite(cur):
        return TrainResult(net, cur, 0, aborted=True, stop_reason="non-finite loss")
    eye = np.eye(net.n_params)
    history = [cur]
    reason = "max epochs"
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        jac, y = _output_jacobian(net, x)
        r = (y - targets).reshape(-1)
        g = jac.T @ r
        a = jac.T @ jac
        improved = False
        while lam <= cfg.lambda_max:
            try:
                step = np.linalg.solve(a + lam * eye, -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            cand = theta + step
            net.unpack(cand)
            new = mse_loss(net, x, targets)
            if not np.isfinite(new):
                net.unpack(theta)
                return TrainResult(net, cur, epoch, aborted=True,
                                   stop_reason="non-finite loss")
            if new < cur:
                theta, cur = cand, new
                lam = max(lam / 10, 1e-12)
                improved = True
                break
            lam *= 10
        if not improved:
            net.unpack(theta)
            reason = "lambda overflow"
            break
        history.append(cur)
        if cur <= cfg.goal_mse:
            reason = "goal reached"
            break
        if (len(history) > cfg.plateau_epochs
                and history[-cfg.plateau_epochs - 1] - cur
                < cfg.plateau_rel * max(cur, 1e-30)):
            reason = "plateau"
            break
    net.unpack(theta)
    return TrainResult(net, cur, epoch, aborted=False, stop_reason=reason)


def train_lm(net: Network, x, targets, cfg: TrainConfig | None = None,
             seed: int = 0) -> TrainResult:
    """LM descent on MSE; accepted steps never increase the loss.

    With restarts > 1, independently seeded initializations are trained and
    the lowest training MSE wins (still deterministic).
    """
    cfg = cfg or TrainConfig()
    x = np.asarray(x, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("empty training set")
    best = _train_once(net.copy(), x, targets, cfg)
    for r in range(1, cfg.restarts):
        alt = init_network(seed=seed + 1000 * r, gain=net.gain)
        res = _train_once(alt, x, targets, cfg)
        if not res.aborted and res.mse < best.mse:
            best = res
    return best


def block_features(cd: np.ndarray) -> np.ndarray:
    """Feature set: per 2x2 block the four DCT coefficients, (bh, bw, 4)."""
    coefs = block_dct2(np.asarray(cd, dtype=np.float64), 2)
    bh, bw = coefs.shape[:2]
    return coefs.reshape(bh, bw, 4)


@dataclass
class ExtractionResult:
    bits: np.ndarray
    confidence: np.ndarray
    run_stats: list = field(default_factory=list)
    used_fallback: bool = False


def _one_hot(bits):
    b = bits.reshape(-1).astype(np.float64)
    return np.stack([1.0 - b, b], axis=1)


def extract_watermark(cd: np.ndarray, watermark: np.ndarray,
                      train_cfg: TrainConfig | None = None,
                      seed: int = 101) -> ExtractionResult:
    """Four half-split train/predict runs over the block features.

    Each run trains on one half of the blocks (labels from the regenerated
    watermark) and predicts the other; every block collects two predictions
    which are averaged, then thresholded by argmax.  A run whose training
    aborts falls back to thresholding the DC against the training-half mean.
    """
    feats = block_features(cd)
    bh, bw = feats.shape[:2]
    bits = np.asarray(watermark)
    if bits.shape != (bh, bw):
        raise ValueError(f"watermark {bits.shape} does not match blocks {(bh, bw)}")
    cfg = train_cfg or TrainConfig()
    halves = [
        (np.s_[:bh // 2, :], np.s_[bh // 2:, :]),
        (np.s_[bh // 2:, :], np.s_[:bh // 2, :]),
        (np.s_[:, :bw // 2], np.s_[:, bw // 2:]),
        (np.s_[:, bw // 2:], np.s_[:, :bw // 2]),
    ]
    votes = np.zeros((bh, bw, 2))
    stats = []
    any_fallback = False
    for run, (tr, te) in enumerate(halves):
        x_tr = feats[tr].reshape(-1, 4)
        mu = x_tr.mean(axis=0)
        sd = x_tr.std(axis=0)
        sd[sd < 1e-12] = 1.0
        targets = _one_hot(bits[tr])
        net = init_network(seed=seed + run)
        res = train_lm(net, (x_tr - mu) / sd, targets, cfg, seed=seed + run)
        x_te = (feats[te].reshape(-1, 4) - mu) / sd
        if res.aborted:
            any_fallback = True
            dc_mean = float(feats[tr].reshape(-1, 4)[:, 0].mean())
            hard = (feats[te].reshape(-1, 4)[:, 0] > dc_mean).astype(np.float64)
            pred = np.stack([1.0 - hard, hard], axis=1)
        else:
            pred, _ = forward_batch(res.net, x_te)
        votes[te] += pred.reshape(bits[te].shape + (2,))
        stats.append({"run": run, "mse": res.mse, "epochs": res.epochs,
                      "aborted": res.aborted, "stop": res.stop_reason})
    fused = votes / 2.0
    out = (fused[..., 1] > fused[..., 0]).astype(np.uint8)
    confidence = fused[..., 1] - fused[..., 0]
    return ExtractionResult(bits=out, confidence=confidence, run_stats=stats,
                            used_fallback=any_fallback)
