"""Exit criteria for the package.

Each test covers one numbered criterion and prints a PASS/FAIL line in the
"acceptance criteria" section of the pytest summary. Tolerances are fixed
here and are not tuned per run.
"""

import shutil
import time

import numpy as np
import pytest

from bilstm_seizure.cli import main
from bilstm_seizure.dataset import (
    EegClip,
    Label,
    STANDARD_TEST_CLIPS,
    STANDARD_TRAIN_CLIPS,
    read_clip,
    split_dataset,
    write_clip,
)
from bilstm_seizure.evaluation import roc_auc
from bilstm_seizure.features import (
    DEFAULT_BINS,
    FrequencyBin,
    extract_clip_features,
    magnitude_spectrum,
    psi,
)
from bilstm_seizure.neural import (
    ModelConfig,
    init_model,
    load_checkpoint,
    loss_and_grad,
    model_forward,
    save_checkpoint,
)
from bilstm_seizure.features import NormalizationStats
from bilstm_seizure.pipeline import read_epoch_log
from gradcheck import random_instance, worst_gradient_error
from oracles import naive_dft_magnitudes, pair_count_auc, params_as_lists, scalar_model_forward

SEED = 8675309


def _auc_from_stdout(text):
    return float(text.split("auc=")[1].split()[0])


@pytest.mark.criterion("1", "BPTT gradients match central differences (20 models, rel 1e-4, abs floor 1e-7, < 60 s)")
def test_gradient_check(criterion):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = max_abs = 0.0
    n_params = 0
    for _ in range(20):
        model, x, y = random_instance(rng, max_d=8, max_h=8, max_t=6, batch=1)
        _, grads, _ = loss_and_grad(model, x, y)
        ratio, dev = worst_gradient_error(model, x, y, grads)
        worst, max_abs = max(worst, ratio), max(max_abs, dev)
        n_params += model.n_params()
    elapsed = time.perf_counter() - start
    criterion.text = (
        f"({n_params} parameters; max |bptt - fd| {max_abs:.1e}; "
        f"worst violation ratio {worst:.3g}; {elapsed:.1f} s)"
    )
    assert worst <= 1.0
    assert elapsed < 60


@pytest.mark.criterion("2", "vectorised forward equals scalar-loop reference (50 instances, abs 1e-12)")
def test_forward_oracle(criterion):
    rng = np.random.default_rng(SEED + 1)
    worst = 0.0
    for _ in range(50):
        model, x, _ = random_instance(rng, max_d=8, max_h=8, max_t=6, batch=1)
        got = model_forward(model, x[0])
        layers = [(params_as_lists(f), params_as_lists(b)) for f, b in model.layers]
        want = scalar_model_forward(layers, model.dense_W.tolist(), model.dense_b.tolist(), x[0].tolist())
        worst = max(worst, float(np.max(np.abs(got - want))))
    criterion.text = f"(max abs diff {worst:.2e})"
    assert worst <= 1e-12


@pytest.mark.criterion("3", "magnitude spectrum equals naive DFT (100 signals, N <= 256, rel 1e-9)")
def test_dft_oracle(criterion):
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 257))
        x = rng.normal(size=n) * rng.uniform(0.1, 100)
        got = magnitude_spectrum(x).magnitudes
        want = np.array(naive_dft_magnitudes(x.tolist()))
        worst = max(worst, float(np.max(np.abs(got - want)) / np.max(want)))
    criterion.text = f"(max error relative to peak magnitude {worst:.2e})"
    assert worst <= 1e-9


@pytest.mark.criterion("4", "PSI additivity (100 signals, rel 1e-12) and bin-aligned 10 Hz cosine")
def test_psi_additivity(criterion):
    rng = np.random.default_rng(SEED + 3)
    fs, n = 400.0, 12000
    wide = FrequencyBin(0.1, 180.0)
    worst = 0.0
    for _ in range(100):
        spec = magnitude_spectrum(rng.normal(size=n) * rng.uniform(0.1, 100))
        parts = sum(psi(spec, b, fs, n) for b in DEFAULT_BINS)
        whole = psi(spec, wide, fs, n)
        worst = max(worst, abs(parts - whole) / whole)
    assert worst <= 1e-12

    spec = magnitude_spectrum(np.cos(2 * np.pi * 10.0 * np.arange(n) / fs))
    values = [psi(spec, b, fs, n) for b in DEFAULT_BINS]
    # exact in real arithmetic; the FFT contributes only rounding noise
    assert abs(values[2] - 6000.0) <= 1e-12 * 6000.0
    leak = max(v for k, v in enumerate(values) if k != 2) / 6000.0
    assert leak < 1e-6
    criterion.text = f"(additivity err {worst:.1e}; PSI[8,12) = {values[2]!r}; max leak {leak:.1e})"


@pytest.mark.criterion("5", "shape law: 16 ch x 600 s x 400 Hz -> 20x144; 3459 clips split 2900/559")
def test_shape_law(criterion, tmp_path):
    rng = np.random.default_rng(SEED + 4)
    clip = EegClip("dog", "c", Label.PREICTAL, 400.0, rng.normal(size=(16, 240000)))
    write_clip(clip, tmp_path / "c.eegc")
    seq = extract_clip_features(read_clip(tmp_path / "c.eegc"), 30.0, DEFAULT_BINS)
    assert seq.values.shape == (20, 144)
    split = split_dataset(3459, STANDARD_TRAIN_CLIPS / 3459, seed=SEED)
    assert (len(split.train), len(split.test)) == (2900, 559) == (STANDARD_TRAIN_CLIPS, STANDARD_TEST_CLIPS)
    assert sorted(split.train + split.test) == list(range(3459))
    criterion.text = f"(sequence {seq.values.shape}, split {len(split.train)}/{len(split.test)})"


@pytest.mark.criterion("6", "trapezoidal AUC equals pair counting (200 sets, <= 1000 points, abs 1e-12)")
def test_auc_oracle(criterion):
    rng = np.random.default_rng(SEED + 5)
    worst = 0.0
    for k in range(200):
        n = int(rng.integers(2, 1001))
        labels = rng.integers(0, 2, size=n)
        labels[0], labels[1] = 0, 1
        scores = rng.normal(size=n) + 0.7 * labels
        if k % 2:
            scores = np.round(scores, 1)  # force many ties
        worst = max(worst, abs(roc_auc(scores, labels) - pair_count_auc(scores.tolist(), labels.tolist())))
    assert worst <= 1e-12
    assert roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert roc_auc([0.5] * 4, [1, 1, 0, 0]) == 0.5
    assert roc_auc([0.9, 0.35, 0.6, 0.1], [1, 1, 0, 0]) == 0.75
    criterion.text = f"(max diff {worst:.1e}; fixed cases 1.0 / 0.5 / 0.75 exact)"


def _pipeline(root, seed, amplitude, synth_extra=(), train_extra=(), keep_clips=False, capsys=None):
    """synth -> extract -> train -> evaluate through the CLI; returns (test AUC, final train AUC)."""
    data, feat, run, ev = root / "data", root / "feat", root / "run", root / "eval"
    assert main(["synth", "--out", str(data), "--seed", str(seed), "--amplitude", str(amplitude),
                 *map(str, synth_extra)]) == 0
    assert main(["extract", "--manifest", str(data / "manifest.tsv"), "--out", str(feat)]) == 0
    if not keep_clips:
        shutil.rmtree(data)  # full-size clips are 15 MB each
    assert main(["train", "--features", str(feat / "features.csv"), "--out", str(run), "--seed", str(seed),
                 "--train-fraction", "0.7", *map(str, train_extra)]) == 0
    if capsys is not None:
        capsys.readouterr()
    assert main(["evaluate", "--checkpoint", str(run / "model.blsm"), "--features", str(feat / "features.csv"),
                 "--split", str(run / "split.csv"), "--out", str(ev)]) == 0
    test_auc = _auc_from_stdout(capsys.readouterr().out) if capsys is not None else None
    return test_auc, read_epoch_log(run / "epochs.csv")[-1].train_auc


@pytest.mark.criterion(
    "7", "synthetic end-to-end: 100+100 clips, amplitude 5 sigma, 70/30, defaults, 50 epochs -> test AUC >= 0.95; "
    "null control in [0.4, 0.6] for seeds 0-2; total <= 10 min"
)
@pytest.mark.slow
def test_end_to_end_synthetic(criterion, tmp_path, capsys):
    start = time.perf_counter()
    signal_auc, _ = _pipeline(tmp_path / "signal", 0, 5.0, capsys=capsys)
    null_aucs = [_pipeline(tmp_path / f"null{s}", s, 0.0, capsys=capsys)[0] for s in range(3)]
    elapsed = time.perf_counter() - start
    criterion.text = (
        f"(signal test AUC {signal_auc:.4f}; null test AUCs "
        f"{', '.join(f'{a:.4f}' for a in null_aucs)}; {elapsed / 60:.1f} min)"
    )
    assert signal_auc >= 0.95
    assert all(0.4 <= a <= 0.6 for a in null_aucs)
    assert elapsed <= 600


@pytest.mark.criterion("8", "two identical-seed pipeline runs give byte-identical checkpoints and equal AUC")
def test_determinism(criterion, tmp_path, capsys):
    small_synth = ["--preictal", "15", "--interictal", "15", "--duration", "120"]
    runs = []
    for name in ("a", "b"):
        test_auc, _ = _pipeline(tmp_path / name, 42, 2.0, synth_extra=small_synth,
                                train_extra=["--epochs", "10"], keep_clips=True, capsys=capsys)
        runs.append(test_auc)
    a, b = tmp_path / "a", tmp_path / "b"
    for rel in ["data/manifest.tsv", "feat/features.csv", "run/model.blsm", "run/epochs.csv",
                "run/split.csv", "eval/roc.csv"]:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel
    for clip in (a / "data" / "synth").glob("*.eegc"):
        assert clip.read_bytes() == (b / "data" / "synth" / clip.name).read_bytes()
    assert runs[0] == runs[1]
    criterion.text = f"(AUC {runs[0]!r} both runs)"


@pytest.mark.criterion("9", "clip files and checkpoints round-trip bitwise (100 random instances each)")
def test_round_trips(criterion, tmp_path):
    rng = np.random.default_rng(SEED + 9)
    for k in range(100):
        shape = (int(rng.integers(1, 17)), int(rng.integers(1, 2000)))
        clip = EegClip("", f"c{k}", Label.UNKNOWN, float(rng.uniform(1, 2000)),
                       rng.normal(scale=100, size=shape))
        path = tmp_path / f"c{k}.eegc"
        write_clip(clip, path)
        back = read_clip(path)
        assert back == clip
        write_clip(back, tmp_path / "again.eegc")
        assert (tmp_path / "again.eegc").read_bytes() == path.read_bytes()
    for k in range(100):
        cfg = ModelConfig(input_dim=int(rng.integers(1, 20)), hidden_size=int(rng.integers(1, 12)),
                          seq_len=int(rng.integers(1, 25)))
        model = init_model(cfg, k)
        norm = None if k % 3 == 0 else NormalizationStats(rng.normal(size=cfg.input_dim),
                                                          rng.uniform(0.1, 5, size=cfg.input_dim))
        path = tmp_path / f"m{k}.blsm"
        save_checkpoint(model, path, norm)
        back, back_norm = load_checkpoint(path)
        assert back.config == cfg
        for x, y in zip(model.tensors(), back.tensors()):
            assert x.tobytes() == y.tobytes()
        assert (back_norm is None) == (norm is None)
        save_checkpoint(back, tmp_path / "again.blsm", back_norm)
        assert (tmp_path / "again.blsm").read_bytes() == path.read_bytes()
    criterion.text = "(200 files)"
