"""Command-line front end: embed, digest, attack, tamper, authenticate, evaluate."""

import sys
import traceback
from pathlib import Path

import click
import numpy as np

from . import metrics
from .attacks import AttackError, chain, parse_attack_chain
from .authenticator import (AuthenticateConfig, authenticate, block_truth, score)
from .corpus import build_corpus
from .embedder import ThresholdParams, WatermarkKey, embed
from .fnn import TrainConfig
from .halftone import acm_scramble, jarvis_halftone
from .raster import (Raster, RasterError, load_bitmatrix, load_image,
                     save_bitmatrix, save_image)
from .registration import RegistrationConfig
from .report import svg_line_chart, write_csv, write_json
from .scenarios import center_paste_tamper, paste_region

# Fig-10 style catalog, JPEG2000 rows (30-34) are out of scope
ATTACK_CATALOG = (
    [(i + 1, "saltpepper", f"sp:{0.01 * (i + 1):.2f}") for i in range(10)]
    + [(11, "speckle", "speckle:0.005"), (12, "speckle", "speckle:0.01")]
    + [(13 + i, "sharpen", f"sharpen:5,1,{2 * (i + 1)}") for i in range(10)]
    + [(23, "histeq", "histeq")]
    + [(24 + i, "gaussian_smooth", f"smooth:3,{0.1 * (i + 1):.1f}") for i in range(6)]
    + [(35 + i, "jpeg", f"jpeg:{90 - 10 * i}") for i in range(4)]
    + [(39 + i, "darken", f"darken:{60 + 10 * i}") for i in range(5)]
    + [(44 + i, "lighten", f"lighten:{60 + 10 * i}") for i in range(5)]
    + [(49 + i, "rotate", f"rot:{d}") for i, d in
       enumerate((1, 2, 3, 4, 5, 10, 15, 20, 25, 30, 35))]
    + [(60, "translate", "trans:100,100"), (61, "translate", "trans:150,150")]
    + [(62, "crop", "crop:0.25")]
    + [(63 + i, "scale", f"scale:{1.1 + 0.1 * i:.1f}") for i in range(5)]
)


def _fail(message, code=2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(path):
    try:
        return load_image(path)
    except FileNotFoundError:
        _fail(f"missing input file: {path}")
    except RasterError as exc:
        _fail(str(exc))


def _auth_config(scramble, fast):
    cfg = AuthenticateConfig(scramble_iterations=scramble)
    if fast:
        cfg.registration = RegistrationConfig(sample_step=2, max_keypoints=900,
                                              ransac_iters=1200)
        cfg.training = TrainConfig(max_epochs=60)
    return cfg


@click.group()
def main():
    """Semi-fragile watermarking: embed, attack, authenticate, recover."""


@main.command("corpus")
@click.option("--out", type=click.Path(), default="corpus", show_default=True)
@click.option("--overwrite", is_flag=True)
def cmd_corpus(out, overwrite):
    """Build the deterministic stand-in test corpus."""
    paths = build_corpus(out, overwrite=overwrite)
    for name, path in paths.items():
        click.echo(f"{name}: {path}")


@main.command("embed")
@click.argument("cover", type=click.Path())
@click.option("--key", type=int, default=3141592653, show_default=True,
              help="64-bit watermark seed")
@click.option("--t1", type=float, default=5.0, show_default=True)
@click.option("--t2", type=float, default=3.0, show_default=True)
@click.option("--qf", type=int, default=30, show_default=True,
              help="quality factor for the texture map")
@click.option("--scramble", type=int, default=0, show_default=True,
              help="cat-map iterations applied to the digest")
@click.option("--out", type=click.Path(), default=".", show_default=True)
def cmd_embed(cover, key, t1, t2, qf, scramble, out):
    """Watermark COVER; writes watermarked.png, digest.png, report.json."""
    img = _load(cover)
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        result = embed(img, WatermarkKey(key), ThresholdParams(t1, t2), dif_qf=qf)
    except (RasterError, ValueError) as exc:
        _fail(str(exc))
    digest = result.digest
    if scramble:
        if digest.ndim == 3:
            digest = np.stack([acm_scramble(d, scramble) for d in digest])
        else:
            digest = acm_scramble(digest, scramble)
    save_image(result.watermarked, outdir / "watermarked.png")
    save_bitmatrix(digest, outdir / "digest.png")
    report = dict(result.report)
    report["digest_path"] = str(outdir / "digest.png")
    report["scramble"] = scramble
    write_json(outdir / "report.json", report)
    click.echo(f"psnr={report['psnr']:.4f} ssim={report['ssim']:.4f} "
               f"mse={report['mse']:.4f}")


@main.command("digest")
@click.argument("cover", type=click.Path())
@click.option("--scramble", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default="digest.png", show_default=True)
def cmd_digest(cover, scramble, out):
    """Write the halftone digest of COVER."""
    img = _load(cover)
    if img.is_gray:
        digest = jarvis_halftone(img.plane(0))
        if scramble:
            digest = acm_scramble(digest, scramble)
    else:
        digest = np.stack([jarvis_halftone(p) for p in img.data])
        if scramble:
            digest = np.stack([acm_scramble(d, scramble) for d in digest])
    save_bitmatrix(digest, out)
    click.echo(f"digest written to {out}")


@main.command("attack")
@click.argument("image", type=click.Path())
@click.option("--attack", "attack_text", required=True,
              help="chain grammar, e.g. 'sp:0.05;rot:90;jpeg:70'")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default="attacked.png", show_default=True)
def cmd_attack(image, attack_text, seed, out):
    """Apply an attack chain to IMAGE."""
    img = _load(image)
    try:
        specs = parse_attack_chain(attack_text, seed=seed)
        attacked = chain(img, specs)
    except AttackError as exc:
        _fail(str(exc))
    save_image(attacked, out)
    click.echo(f"attacked image written to {out} "
               f"({attacked.height}x{attacked.width})")


@main.command("tamper")
@click.argument("image", type=click.Path())
@click.option("--paste", "paste_src", type=click.Path(), required=True)
@click.option("--at", "at_text", default="center", show_default=True,
              help="'x,y' or 'center'")
@click.option("--size", "size_text", default="100,100", show_default=True)
@click.option("--out", type=click.Path(), default=".", show_default=True)
def cmd_tamper(image, paste_src, at_text, size_text, out):
    """Paste a region of another image; writes tampered.png and truth.png."""
    img = _load(image)
    src = _load(paste_src)
    w, h = (int(v) for v in size_text.split(","))
    if at_text == "center":
        at = ((img.width - w) // 2, (img.height - h) // 2)
    else:
        at = tuple(int(v) for v in at_text.split(","))
    tampered, mask = paste_region(img, src, at, (w, h))
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    save_image(tampered, outdir / "tampered.png")
    save_bitmatrix(mask, outdir / "truth.png")
    click.echo(f"tampered.png and truth.png written to {outdir}")


@main.command("authenticate")
@click.argument("suspect", type=click.Path())
@click.argument("digest", type=click.Path())
@click.option("--key", type=int, default=3141592653, show_default=True)
@click.option("--scramble", type=int, default=0, show_default=True)
@click.option("--truth", type=click.Path(), default=None,
              help="pixel-level truth mask for TPR/FPR scoring")
@click.option("--no-register", is_flag=True, help="skip geometric registration")
@click.option("--fast", is_flag=True, help="cheaper registration/training")
@click.option("--out", type=click.Path(), default=".", show_default=True)
def cmd_authenticate(suspect, digest, key, scramble, truth, no_register, fast, out):
    """Register SUSPECT against DIGEST, localize tampering, recover content."""
    img = _load(suspect)
    bits = load_bitmatrix(digest)
    cfg = _auth_config(scramble, fast)
    cfg.register = not no_register
    result = authenticate(img, bits, WatermarkKey(key), cfg)
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    save_image(result.registered, outdir / "registered.png")
    save_bitmatrix(result.pixel_map, outdir / "tamper_map.png")
    save_image(result.recovered, outdir / "recovered.png")
    report = dict(result.report)
    if truth:
        truth_pixels = load_bitmatrix(truth)
        tpr, fpr = score(result.tamper_map, block_truth(truth_pixels))
        report["tpr"] = tpr
        report["fpr"] = fpr
    write_json(outdir / "report.json", report)
    click.echo(f"ber={report['ber']:.4f} nc={report['nc']:.4f} "
               f"tampered={report['tampered_fraction']:.3f}"
               + (f" tpr={report.get('tpr')}" if truth else ""))


@main.command("evaluate")
@click.argument("corpus_dir", type=click.Path())
@click.option("--image", "image_name", default="lena", show_default=True)
@click.option("--paste-from", default="barbara", show_default=True)
@click.option("--key", type=int, default=3141592653, show_default=True)
@click.option("--ids", "ids_text", default="", help="attack id filter, e.g. '1,23,35'")
@click.option("--rates", "rates_text", default="0.05,0.1,0.2,0.3,0.4,0.5,0.65,0.8",
              show_default=True, help="tamper-rate sweep for recovery curves")
@click.option("--fast", is_flag=True)
@click.option("--out", type=click.Path(), default="evaluation", show_default=True)
def cmd_evaluate(corpus_dir, image_name, paste_from, key, ids_text, rates_text,
                 fast, out):
    """Attack-catalog sweep plus a tamper-rate recovery sweep."""
    corpus_dir = Path(corpus_dir)
    outdir = Path(out)
    (outdir / "plots").mkdir(parents=True, exist_ok=True)
    cover = _load(corpus_dir / f"{image_name}.png")
    paste_src = _load(corpus_dir / f"{paste_from}.png")
    wm_key = WatermarkKey(key)
    result = embed(cover, wm_key)
    wm = result.watermarked
    digest = result.digest
    cfg = _auth_config(0, fast)

    wanted = {int(v) for v in ids_text.split(",") if v.strip()} if ids_text else None
    rows = []
    tampered, truth_pixels = center_paste_tamper(wm, paste_src)
    truth_blocks = block_truth(truth_pixels)
    for attack_id, name, text in ATTACK_CATALOG:
        if wanted is not None and attack_id not in wanted:
            continue
        row = {"id": attack_id, "name": name, "params": text,
               "psnr_attacked": None, "ssim_attacked": None,
               "tpr": None, "fpr": None}
        try:
            specs = parse_attack_chain(text, seed=1000 + attack_id)
            attacked = chain(tampered, specs)
            if (attacked.height, attacked.width) == (wm.height, wm.width):
                row["psnr_attacked"] = round(metrics.psnr(wm.data, attacked.data), 4)
                row["ssim_attacked"] = round(metrics.ssim(wm.data, attacked.data), 4)
            auth = authenticate(attacked, digest, wm_key, cfg)
            tpr, fpr = score(auth.tamper_map, truth_blocks)
            row["tpr"] = None if tpr is None else round(tpr, 2)
            row["fpr"] = None if fpr is None else round(fpr, 2)
        except Exception as exc:   # keep sweeping; the row records the failure
            row["params"] = f"{text} [failed: {exc}]"
            traceback.print_exc()
        rows.append(row)
        click.echo(f"attack {row['id']:>2} {row['name']:<16} "
                   f"tpr={row['tpr']} fpr={row['fpr']}")
    write_csv(outdir / "results.csv", rows,
              ["id", "name", "params", "psnr_attacked", "ssim_attacked",
               "tpr", "fpr"])
    ids = [r["id"] for r in rows]
    svg_line_chart(outdir / "plots" / "tpr_fpr.svg",
                   [("TPR", ids, [r["tpr"] for r in rows]),
                    ("FPR", ids, [r["fpr"] for r in rows])],
                   title=f"Tamper localization vs attack id ({image_name})",
                   xlabel="attack id", ylabel="percent")

    # recovery quality versus tamper rate (no attacks)
    rates = [float(v) for v in rates_text.split(",") if v.strip()]
    sweep_rows = []
    for rate in rates:
        side = int(round((rate * wm.height * wm.width) ** 0.5))
        side = min(side, wm.height - 8)
        x = (wm.width - side) // 2
        y = (wm.height - side) // 2
        tam, _ = paste_region(wm, paste_src, (x, y), (side, side))
        auth = authenticate(tam, digest, wm_key, cfg)
        sweep_rows.append({
            "rate": rate,
            "psnr": round(metrics.psnr(cover.data, auth.recovered.data), 4),
            "ssim": round(metrics.ssim(cover.data, auth.recovered.data), 4),
            "mse": round(metrics.mse(cover.data, auth.recovered.data), 4),
        })
        click.echo(f"rate {rate:.2f}: recovered psnr={sweep_rows[-1]['psnr']}")
    write_csv(outdir / "recovery.csv", sweep_rows, ["rate", "psnr", "ssim", "mse"])
    svg_line_chart(outdir / "plots" / "recovery.svg",
                   [("PSNR", rates, [r["psnr"] for r in sweep_rows])],
                   title=f"Recovery quality vs tamper rate ({image_name})",
                   xlabel="tamper rate", ylabel="PSNR (dB)")
    click.echo(f"results in {outdir}")


if __name__ == "__main__":
    main()
