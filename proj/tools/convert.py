"""Convert a MATLAB hyperspectral cube and ground truth to DSC1/DSL1."""
import argparse
import struct

import numpy as np
from scipy.io import loadmat


def largest_array(path, ndim):
    arrays = [v for k, v in loadmat(path).items() if not k.startswith("__") and np.ndim(v) == ndim]
    if not arrays:
        raise SystemExit(f"{path}: no {ndim}-d array")
    return max(arrays, key=np.size)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("cube_mat")
    ap.add_argument("gt_mat")
    ap.add_argument("cube_out")
    ap.add_argument("gt_out")
    args = ap.parse_args()

    cube = largest_array(args.cube_mat, 3).astype("<f4")
    gt = largest_array(args.gt_mat, 2).astype("<u2")
    h, w, b = cube.shape
    if gt.shape != (h, w):
        raise SystemExit(f"shape mismatch: cube {cube.shape}, gt {gt.shape}")
    with open(args.cube_out, "wb") as f:
        f.write(b"DSC1" + struct.pack("<3I", h, w, b) + np.ascontiguousarray(cube).tobytes())
    with open(args.gt_out, "wb") as f:
        f.write(b"DSL1" + struct.pack("<2I", h, w) + np.ascontiguousarray(gt).tobytes())


if __name__ == "__main__":
    main()
