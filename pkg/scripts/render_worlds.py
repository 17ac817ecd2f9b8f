"""Map every world fixture and write its SVG next to the ground truth.

Run from the repository root::

    python3 scripts/render_worlds.py --alpha 0.5 --out figures

For each ``worlds/*.json`` this writes ``<name>.svg`` with the traced
boundary, the path plan and the mapped objects, plus ``<name>.truth.svg``
with the true room and objects drawn the same way.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from pathmap.errors import PathMapError
from pathmap.geometry import Polygon
from pathmap.pipeline import RunConfig, run_pipeline
from pathmap.render import render_map
from pathmap.world import as_polygon, load_world

WORLDS = Path(__file__).resolve().parents[1] / "worlds"


class _Outline:
    def __init__(self, ident: str, outline: Polygon):
        self.id, self.outline = ident, outline


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--out", type=Path, default=Path("figures"))
    args = ap.parse_args(argv)

    args.out.mkdir(parents=True, exist_ok=True)
    for path in sorted(WORLDS.glob("*.json")):
        try:
            world = load_world(path.read_text())
            run = run_pipeline(world, RunConfig(alpha=args.alpha))
        except PathMapError as exc:
            print(f"{path.stem}: skipped ({exc})", file=sys.stderr)
            continue
        res = run.result
        (args.out / f"{path.stem}.svg").write_text(render_map(res.boundary, run.plan, res.objects))
        truth = [_Outline(f"T{k}", as_polygon(o)) for k, o in enumerate(world.extrinsic + world.intrinsic)]
        (args.out / f"{path.stem}.truth.svg").write_text(render_map(as_polygon(world.outer), None, truth))
        print(f"{path.stem}: paths={len(run.plan)} objects={len(res.objects)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
