"""Write a weight preset to an NLHF file for use with ``weight.kind = from_file``."""
import argparse

from nlhelm.numerics.grid_field import Grid
from nlhelm.numerics.nlhf import write_field
from nlhelm.weights import WeightSpec, get_preset, realize


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("preset", help="Name of a built-in weight preset")
    parser.add_argument("output", help="Destination .nlhf file")
    parser.add_argument("--M", type=int, default=64, help="Points per axis")
    parser.add_argument("--L", type=float, default=8.0, help="Half-extent of the box")
    parser.add_argument("--scale", type=float, default=1.0, help="Multiply Q by this factor")
    args = parser.parse_args()

    preset = get_preset(args.preset)
    grid = Grid(preset["dimension"], args.M, args.L)
    Q = realize(WeightSpec(preset["kind"], preset["parameters"]), grid) * args.scale
    path = write_field(args.output, Q)
    print(f"Wrote {args.preset} on N={grid.N} M={grid.M} L={grid.L:g} to {path}")


if __name__ == "__main__":
    main()
