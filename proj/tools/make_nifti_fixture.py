# Copyright 2026 The hurmacl Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the 16^3 int16 NIfTI fixture with nibabel and prints its checksums."""

import sys

import nibabel as nib
import numpy as np


def main(out_dir):
    x, y, z = np.meshgrid(np.arange(16), np.arange(16), np.arange(16), indexing="ij")
    data = ((x * 37 + y * 11 + z * 5 + x * y * z) % 2001 - 1000).astype(np.int16)
    affine = np.diag([0.8, 0.9, 2.5, 1.0])
    img = nib.Nifti1Image(data, affine)
    img.header.set_zooms((0.8, 0.9, 2.5))
    nib.save(img, f"{out_dir}/fixture_int16.nii.gz")
    flat = data.flatten(order="F").astype(np.int64)
    weighted = int(np.sum(flat * (np.arange(flat.size) % 251 + 1)))
    with open(f"{out_dir}/fixture_int16.txt", "w") as f:
        f.write(f"sum {int(flat.sum())}\nweighted {weighted}\nmin {int(flat.min())}\nmax {int(flat.max())}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
