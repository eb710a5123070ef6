#!/usr/bin/env python3
"""Generate the bundled stand-in level corpus.

The toolkit's pipelines are written against the VGLC text format, but the
original corpus files cannot be redistributed here, so this tool synthesizes
structurally game-like stand-ins: ground/gap/pipe/staircase Mario levels,
vertical Kid Icarus towers, and Mega Man corridor+shaft levels with section
annotations. Level dimensions are pinned so that the sliding-window segment
counts match the reference corpus exactly:

    SMB stride-1      sum(w - 15)              = 2643
    KI  stride-1      sum(h - 15)              = 1142
    MM  stride-1      corridors + shafts       = 2983
    patterns stride16 floor(w/16) over SMB+LL  = 407

Output is deterministic (fixed seeds); the generated files are checked in,
so this tool only needs to run again if the generators change.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

# Level widths/heights. Do not edit casually: the sums above depend on them.
SMB_LEVELS = {
    "mario-1-1": 202, "mario-1-2": 218, "mario-1-3": 171, "mario-2-1": 218,
    "mario-3-1": 186, "mario-3-3": 179, "mario-4-1": 165, "mario-4-2": 230,
    "mario-5-1": 187, "mario-5-3": 212, "mario-6-1": 157, "mario-6-2": 202,
    "mario-6-3": 220, "mario-7-1": 158, "mario-8-1": 163,
}  # widths sum to 2868 -> 2643 segments; floor(w/16) sums to 171

LL_FLOOR16 = {
    "lostlevels-1-1": 12, "lostlevels-1-2": 13, "lostlevels-1-3": 10,
    "lostlevels-2-1": 11, "lostlevels-2-2": 12, "lostlevels-3-1": 14,
    "lostlevels-3-2": 11, "lostlevels-3-3": 12, "lostlevels-4-1": 13,
    "lostlevels-4-2": 9,  "lostlevels-4-3": 12, "lostlevels-5-1": 11,
    "lostlevels-5-2": 13, "lostlevels-6-1": 12, "lostlevels-6-2": 10,
    "lostlevels-6-3": 12, "lostlevels-7-1": 13, "lostlevels-7-2": 11,
    "lostlevels-8-1": 12, "lostlevels-8-2": 13,
}  # floor(w/16) values sum to 236; 171 + 236 = 407 pattern segments

KI_LEVELS = {
    "kidicarus-1": 210, "kidicarus-2": 202, "kidicarus-3": 218,
    "kidicarus-4": 196, "kidicarus-5": 202, "kidicarus-6": 204,
}  # heights sum to 1232 -> 1142 segments

MM_LEVELS = {  # (corridor width, shaft height)
    "megaman-01": (190, 150), "megaman-02": (175, 142), "megaman-03": (186, 155),
    "megaman-04": (170, 139), "megaman-05": (182, 148), "megaman-06": (175, 152),
    "megaman-07": (181, 146), "megaman-08": (177, 151), "megaman-09": (177, 143),
    "megaman-10": (187, 157),
}  # corridor widths sum to 1800, shaft heights to 1483 -> 1650 + 1333 = 2983 segments

SMB_HEIGHT = 14   # rows in the source files; padded to 16 by the loader
MM_CORRIDOR_HEIGHT = 14


def _grid(height: int, width: int, fill: str = "-") -> np.ndarray:
    return np.full((height, width), fill, dtype="<U1")


def _rows(grid: np.ndarray) -> str:
    return "\n".join("".join(row) for row in grid) + "\n"


# --- Super Mario Bros. style ---

def gen_smb_level(width: int, rng: np.random.Generator, hard: bool = False) -> np.ndarray:
    """Ground-based horizontal level: gaps, pipes, stairs, bricks, enemies."""
    g = _grid(SMB_HEIGHT, width)
    g[12:, :] = "X"
    gap_w = 0.22 if hard else 0.15
    x = 2
    while x < width - 4:
        feature = rng.choice(
            ["flat", "gap", "pipe", "stairs", "cannon"],
            p=[0.50 - gap_w + 0.15, gap_w, 0.13, 0.15, 0.07],
        )
        if feature == "flat":
            run = int(rng.integers(3, 9))
            run = min(run, width - x - 1)
            if rng.random() < 0.45:  # decoration row: bricks with question blocks
                row = 8
                for i in range(x, min(x + run, width)):
                    r = rng.random()
                    g[row, i] = "S" if r < 0.55 else ("?" if r < 0.8 else ("Q" if r < 0.9 else "-"))
            if rng.random() < 0.40:  # coin arc
                c0 = x + int(rng.integers(0, max(1, run - 2)))
                for i in range(c0, min(c0 + int(rng.integers(2, 5)), width)):
                    g[int(rng.integers(9, 11)), i] = "o"
            if rng.random() < 0.62:  # enemies on the ground, sometimes a horde
                e0 = x + int(rng.integers(0, max(1, run - 1)))
                g[11, min(e0, width - 1)] = "E"
                if rng.random() < 0.38:
                    g[11, min(e0 + int(rng.integers(1, 3)), width - 1)] = "E"
            x += run
        elif feature == "gap":
            run = int(rng.integers(2, 5))
            run = min(run, width - x - 3)
            if run >= 2:
                g[12:, x:x + run] = "-"
            x += run + int(rng.integers(2, 5))
        elif feature == "pipe":
            h = int(rng.integers(2, 5))
            if x + 1 < width:
                g[12 - h, x], g[12 - h, x + 1] = "<", ">"
                for r in range(12 - h + 1, 12):
                    g[r, x], g[r, x + 1] = "[", "]"
            x += 2 + int(rng.integers(2, 6))
        elif feature == "stairs":
            steps = int(rng.integers(3, 6))
            up_then_down = rng.random() < 0.5
            for s in range(steps):
                if x >= width - 2:
                    break
                for r in range(12 - (s + 1), 12):
                    g[r, x] = "X"
                x += 1
            if up_then_down:
                x += int(rng.integers(0, 3))
                for s in range(steps, 0, -1):
                    if x >= width - 2:
                        break
                    for r in range(12 - s, 12):
                        g[r, x] = "X"
                    x += 1
            else:
                x += int(rng.integers(2, 5))
        else:  # cannon
            h = int(rng.integers(1, 3))
            for i, r in enumerate(range(12 - h, 12)):
                g[r, x] = "B" if i == 0 else "b"
            x += 1 + int(rng.integers(2, 6))
    return g


# --- Kid Icarus style ---

def gen_ki_level(height: int, rng: np.random.Generator) -> np.ndarray:
    """Vertical tower, 16 wide: platforms, walls, doors, hazards."""
    g = _grid(height, 16)
    g[height - 1, :] = "#"  # base floor
    wall_left = wall_right = True
    y = height - 2
    while y > 2:
        chunk = int(rng.integers(2, 5))
        if rng.random() < 0.18:
            wall_left = not wall_left
        if rng.random() < 0.18:
            wall_right = not wall_right
        for r in range(max(0, y - chunk), y + 1):
            if wall_left:
                g[r, 0] = "#"
            if wall_right:
                g[r, 15] = "#"
        y -= chunk
        if y <= 2:
            break
        kind = rng.choice(["block", "platform", "moving", "none"], p=[0.36, 0.34, 0.16, 0.14])
        if kind == "none":
            continue
        if kind == "moving":
            c = int(rng.integers(3, 12))
            g[y, c:c + 2] = "M"
            continue
        char = "#" if kind == "block" else "T"
        run = int(rng.integers(3, 9)) if char == "#" else int(rng.integers(4, 13))
        side = rng.choice(["left", "right", "center"])
        if side == "left":
            c0 = 1
        elif side == "right":
            c0 = 15 - run
        else:
            c0 = int(rng.integers(2, max(3, 14 - run)))
        c0 = max(1, min(c0, 15 - run))
        g[y, c0:c0 + run] = char
        if rng.random() < 0.30:  # hazard on the platform
            hc = c0 + int(rng.integers(0, run))
            if g[y - 1, hc] == "-":
                g[y - 1, hc] = "H"
        if rng.random() < 0.22:  # door resting on the platform
            dc = c0 + int(rng.integers(0, run))
            if g[y - 1, dc] == "-":
                g[y - 1, dc] = "D"
    return g


# --- Mega Man style ---

def gen_mm_corridor(width: int, rng: np.random.Generator) -> np.ndarray:
    """Horizontal corridor with ceiling, spikes, ladders, platforms, doors."""
    g = _grid(MM_CORRIDOR_HEIGHT, width)
    g[13, :] = "#"
    g[12, :] = "#"
    g[0, :] = "#"
    x = 2
    while x < width - 4:
        feature = rng.choice(
            ["floor", "spikes", "platform", "blocks", "door"],
            p=[0.34, 0.16, 0.30, 0.14, 0.06],
        )
        if feature == "floor":
            run = int(rng.integers(3, 8))
            if rng.random() < 0.4:
                g[11, min(x + 1, width - 1)] = "C"
            x += run
        elif feature == "spikes":
            run = min(int(rng.integers(2, 5)), width - x - 2)
            g[11, x:x + run] = "H"
            x += run + int(rng.integers(2, 4))
        elif feature == "platform":
            run = min(int(rng.integers(3, 7)), width - x - 2)
            row = int(rng.integers(5, 10))
            char = "P" if rng.random() < 0.45 else "#"
            g[row, x:x + run] = char
            lad = x + int(rng.integers(0, run))
            for r in range(row + 1, 12):  # ladder down to the floor
                g[r, lad] = "L"
            if rng.random() < 0.5:
                g[row - 1, x + int(rng.integers(0, run))] = "C"
            if rng.random() < 0.25:
                mcol = min(x + run + 1, width - 2)
                g[max(2, row - 2), mcol] = "M"
            x += run + int(rng.integers(2, 6))
        elif feature == "blocks":
            run = min(int(rng.integers(2, 4)), width - x - 2)
            hgt = int(rng.integers(1, 4))
            g[12 - hgt:12, x:x + run] = "*"
            x += run + int(rng.integers(2, 5))
        else:  # door: full-height gate with a passage
            g[1:12, x] = "#"
            g[9:12, x] = "D"
            x += 1 + int(rng.integers(4, 9))
    return g


def gen_mm_shaft(height: int, rng: np.random.Generator) -> np.ndarray:
    """Vertical shaft, 16 wide: alternating ledges connected by ladders."""
    g = _grid(height, 16)
    g[:, 0] = "#"
    g[:, 15] = "#"
    g[height - 1, :] = "#"
    y = height - 2
    side_left = True
    while y > 3:
        step = int(rng.integers(3, 6))
        y -= step
        if y <= 3:
            break
        run = int(rng.integers(5, 10))
        c0 = 1 if side_left else 15 - run
        c0 = max(1, min(c0, 15 - run))
        g[y, c0:c0 + run] = "#"
        lad = c0 + run - 1 if side_left else c0
        for r in range(y + 1, min(y + step + 1, height - 1)):  # ladder to the ledge below
            if g[r, lad] == "-":
                g[r, lad] = "L"
        if rng.random() < 0.35:
            cc = c0 + int(rng.integers(0, run))
            if g[y - 1, cc] == "-":
                g[y - 1, cc] = "C"
        if rng.random() < 0.25:
            hc = c0 + int(rng.integers(0, run))
            if g[y - 1, hc] == "-":
                g[y - 1, hc] = "H"
        if rng.random() < 0.18:
            dc = 1 if not side_left else 14
            if g[y - 1, dc] == "-":
                g[y - 1, dc] = "D"
        if rng.random() < 0.20:
            g[max(2, y - 2), int(rng.integers(4, 12))] = "M"
        side_left = not side_left
    return g


MM_TILEMAP_HEADER = """\
# Tile map for Mega Man (VGLC-style character set).
# Levels mix horizontal corridors and vertical shafts; the per-level
# `sections` table below splits each file into rectangular slices with a
# slide direction. '@' marks void outside the playable sections.
# NOTE: the sections table matches the bundled stand-in corpus and is
# regenerated by tools/make_corpus.py; point `levels.dir` and `sections`
# at your own annotations when using a real corpus checkout.
game: MM
name: Mega Man
orientation: sections
expected_padding: 2
empty_tile: "-"
tiles:
  - {char: "-", name: empty,           tags: [empty, passable]}
  - {char: "#", name: block,           tags: [solid, ground]}
  - {char: "*", name: breakable,       tags: [solid, breakable]}
  - {char: "C", name: collectable,     tags: [passable, collectable, reward]}
  - {char: "D", name: door,            tags: [solid, door]}
  - {char: "H", name: hazard,          tags: [hazard]}
  - {char: "L", name: ladder,          tags: [passable, ladder, climbable]}
  - {char: "M", name: platform-moving, tags: [platform, moving-platform]}
  - {char: "P", name: platform,        tags: [solid, platform, fixed-platform]}
  - {char: "@", name: void,            tags: [void]}
elements:
  - {name: Hazard,      chars: ["H"]}
  - {name: Door,        chars: ["D"]}
  - {name: Ladder,      chars: ["L"]}
  - {name: Platform,    chars: ["M", "P"]}
  - {name: Collectable, chars: ["C"]}
levels:
  dir: mm
  glob: "megaman-*.txt"
sections:
"""


def write_corpus(out_root: Path, tilemap_dir: Path) -> None:
    smb_dir = out_root / "smb"
    ll_dir = out_root / "smb2ll"
    ki_dir = out_root / "ki"
    mm_dir = out_root / "mm"
    for d in (smb_dir, ll_dir, ki_dir, mm_dir):
        d.mkdir(parents=True, exist_ok=True)

    for i, (name, width) in enumerate(sorted(SMB_LEVELS.items())):
        rng = np.random.default_rng(1000 + i)
        (smb_dir / f"{name}.txt").write_text(_rows(gen_smb_level(width, rng)))

    rng_w = np.random.default_rng(4242)
    for i, (name, f16) in enumerate(sorted(LL_FLOOR16.items())):
        width = 16 * f16 + int(rng_w.integers(0, 16))
        rng = np.random.default_rng(2000 + i)
        (ll_dir / f"{name}.txt").write_text(_rows(gen_smb_level(width, rng, hard=True)))

    for i, (name, height) in enumerate(sorted(KI_LEVELS.items())):
        rng = np.random.default_rng(3000 + i)
        (ki_dir / f"{name}.txt").write_text(_rows(gen_ki_level(height, rng)))

    sections_yaml = []
    for i, (name, (cw, sh)) in enumerate(sorted(MM_LEVELS.items())):
        rng = np.random.default_rng(5000 + i)
        corridor = gen_mm_corridor(cw, rng)
        shaft = gen_mm_shaft(sh, rng)
        level = _grid(MM_CORRIDOR_HEIGHT + sh, cw, fill="@")
        level[:MM_CORRIDOR_HEIGHT, :] = corridor
        level[MM_CORRIDOR_HEIGHT:, cw - 16:] = shaft
        # open the corridor floor into the shaft so the two sections connect
        level[12:MM_CORRIDOR_HEIGHT, cw - 9:cw - 5] = "L"
        (mm_dir / f"{name}.txt").write_text(_rows(level))
        sections_yaml.append(
            f"  {name}.txt:\n"
            f"    - {{rows: [0, {MM_CORRIDOR_HEIGHT}], cols: [0, {cw}], orientation: horizontal}}\n"
            f"    - {{rows: [{MM_CORRIDOR_HEIGHT}, {MM_CORRIDOR_HEIGHT + sh}], "
            f"cols: [{cw - 16}, {cw}], orientation: vertical}}"
        )
    (tilemap_dir / "mm.yaml").write_text(MM_TILEMAP_HEADER + "\n".join(sections_yaml) + "\n")

    (out_root / "README.md").write_text(
        "# Bundled stand-in corpus\n\n"
        "These level files are **synthetic stand-ins**, generated by\n"
        "`tools/make_corpus.py`. They follow the VGLC text format and their\n"
        "dimensions reproduce the reference corpus segment counts exactly\n"
        "(SMB 2643, KI 1142, MM 2983 at stride 1; 407 pattern segments at\n"
        "stride 16), but their content is generated, not extracted from the\n"
        "original games. To run against a real corpus checkout, set\n"
        "`CONDLEVEL_CORPUS` (or `--corpus`) to a directory laid out per the\n"
        "tile-map configs and adjust those configs' `levels`/`sections`.\n"
    )


def check_counts(out_root: Path) -> None:
    from condlevel.datasets import build_dataset

    expected = {"smb": 2643, "ki": 1142, "mm": 2983, "patterns": 407, "blend": 2643 + 2 * 1142 + 2983}
    for dataset_id, want in expected.items():
        ds = build_dataset(dataset_id, corpus_root=out_root)
        status = "ok" if len(ds) == want else f"MISMATCH (want {want})"
        print(f"{dataset_id:9s} {len(ds):5d} segments  {status}")
        assert len(ds) == want, f"{dataset_id}: {len(ds)} != {want}"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("src/condlevel/data/corpus"))
    parser.add_argument("--tilemaps", type=Path, default=Path("src/condlevel/data/tilemaps"))
    parser.add_argument("--check", action="store_true", help="verify segment counts after writing")
    args = parser.parse_args()
    write_corpus(args.out, args.tilemaps)
    print(f"corpus written to {args.out}")
    if args.check:
        check_counts(args.out)


if __name__ == "__main__":
    main()
