"""Writes the 64-card fixture board used by tests and the demo server.

Outputs (in tests/data/board/):
  face_NN.png           16x16 tiles, one colour per card
  fixture_images.csv    image_id,bit1..bit40 with seeded +-1 bits
  list_attr_celeba.txt  the same bits in the CelebA annotation layout
"""

import argparse
import pathlib

import cv2
import numpy as np

ATTRIBUTES = (
    "5_o_Clock_Shadow Arched_Eyebrows Attractive Bags_Under_Eyes Bald Bangs Big_Lips Big_Nose "
    "Black_Hair Blond_Hair Blurry Brown_Hair Bushy_Eyebrows Chubby Double_Chin Eyeglasses Goatee "
    "Gray_Hair Heavy_Makeup High_Cheekbones Male Mouth_Slightly_Open Mustache Narrow_Eyes No_Beard "
    "Oval_Face Pale_Skin Pointy_Nose Receding_Hairline Rosy_Cheeks Sideburns Smiling Straight_Hair "
    "Wavy_Hair Wearing_Earrings Wearing_Hat Wearing_Lipstick Wearing_Necklace Wearing_Necktie Young"
).split()
CARDS = 64


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=pathlib.Path(__file__).resolve().parents[1] / "tests" / "data" / "board")
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    assert len(ATTRIBUTES) == 40

    rng = np.random.default_rng(args.seed)
    bits = np.where(rng.random((CARDS, 40)) < 0.5, 1, -1)
    names = [f"face_{i + 1:02d}.png" for i in range(CARDS)]

    for name, row in zip(names, bits):
        colour = rng.integers(0, 256, size=3, dtype=np.uint8)
        tile = np.broadcast_to(colour, (16, 16, 3)).copy()
        tile[4:12, 4:12] = 255 - colour
        cv2.imwrite(str(out / name), tile)

    with open(out / "fixture_images.csv", "w", encoding="utf-8", newline="") as f:
        f.write("image_id," + ",".join(f"bit{i + 1}" for i in range(40)) + "\n")
        for name, row in zip(names, bits):
            f.write(name + "," + ",".join(str(int(b)) for b in row) + "\n")

    with open(out / "list_attr_celeba.txt", "w", encoding="utf-8", newline="") as f:
        f.write(f"{CARDS}\n")
        f.write(" ".join(ATTRIBUTES) + " \n")
        for name, row in zip(names, bits):
            f.write(name + " " + " ".join(f"{int(b):2d}" for b in row) + "\n")
    print(f"wrote {CARDS} cards to {out}")


if __name__ == "__main__":
    main()
