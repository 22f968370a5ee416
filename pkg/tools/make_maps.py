"""Regenerate the bundled scenario maps.

Obstacle layouts are hand-placed approximations of the evaluation figures;
boxes are (x0, y0, x1, y1) in meters.
"""

from pathlib import Path

from followahead.grid import OccupancyGrid

OUT = Path(__file__).resolve().parents[1] / "src" / "followahead" / "data" / "maps"

PILLARS = [(3.18, -0.18), (3.18, 6.18), (-3.18, 6.18), (-3.18, -0.18)]

MAPS = {
    "open-straight": ((-4.0, -6.0), (30.0, 12.0), []),
    "open-curves": ((-6.0, -10.0), (24.0, 20.0), []),
    # four 0.5 m pillars on a 4.5 m ring around the 3 m walking circle
    "circle-obstacles": ((-8.0, -4.0), (16.0, 14.0),
                         [(x - 0.25, y - 0.25, x + 0.25, y + 0.25) for x, y in PILLARS]),
    # blocks on the outside of both bends
    "s-shape-obstacles": ((-6.0, -10.0), (24.0, 20.0), [(4.5, -1.5, 5.1, 0.6), (1.6, 2.7, 2.4, 3.3)]),
    # wall beyond the far end of the U
    "u-shape-obstacle": ((-6.0, -10.0), (24.0, 20.0), [(5.0, -1.5, 5.6, 3.5)]),
    # 3.3 m wide corridor turning left
    "l-corridor": ((-6.0, -10.0), (24.0, 20.0), [
        (-3.0, -1.8, 6.0, -1.5), (5.7, -1.8, 6.0, 9.9), (-3.0, 1.8, 2.2, 2.1), (1.9, 1.8, 2.2, 9.9),
    ]),
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    res = 0.1
    for name, (origin, (sx, sy), boxes) in MAPS.items():
        grid = OccupancyGrid.empty(round(sx / res), round(sy / res), res, origin).with_obstacles(boxes)
        (OUT / f"{name}.map").write_text(grid.dumps())
        print(name, grid.width, grid.height, grid.occupied_count())


if __name__ == "__main__":
    main()
