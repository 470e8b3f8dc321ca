import os
import argparse

from pcp_bnp.instance import FILE_SUFFIX, generate, instance_name, write_instance
from pcp_bnp.config import BACKENDS


def family(max_vertices):
    """The size sweep `v10, v20, ...` with its pile and interval counts."""
    for num_vertices in range(10, max_vertices + 1, 10):
        piles = 5 if num_vertices <= 40 else 10
        k = num_vertices // 10 if num_vertices >= 30 else 2
        yield num_vertices, k, piles


if __name__ == "__main__":
    parser = argparse.ArgumentParser(
        description="Create the instances of the size sweep and a manifest running"
                    " every backend on each of them."
    )
    parser.add_argument("--output", type=str, default="sweep",
                        help="Output folder. Default: sweep")
    parser.add_argument("--max-vertices", type=int, default=100,
                        help="Largest instance size. Default: 100")
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3],
                        help="Instance seeds. Default: 1 2 3")
    parser.add_argument("--horizon", type=int, default=24,
                        help="Planning horizon. Default: 24")
    parser.add_argument("--duration", type=int, default=3,
                        help="Charging duration. Default: 3")
    args = parser.parse_args()

    instance_dir = os.path.join(args.output, "instances")
    os.makedirs(instance_dir, exist_ok=True)

    lines = []
    for num_vertices, k, piles in family(args.max_vertices):
        for seed in args.seeds:
            inst = generate(num_vertices, k, piles, seed,
                            horizon=args.horizon, duration=args.duration)
            filename = instance_name(inst) + FILE_SUFFIX
            write_instance(inst, os.path.join(instance_dir, filename))

            for backend in BACKENDS:
                lines.append(f"instances/{filename} {backend} {seed}\n")

    with open(os.path.join(args.output, "manifest.txt"), "w") as f:
        f.writelines(lines)

    print(f"Wrote {len(lines)} runs to '{args.output}/manifest.txt'.")
