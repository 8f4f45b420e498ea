#!/usr/bin/env python3
"""Regenerates the synthetic fixture images and their mock descriptions.

The mock backend looks descriptions up by content hash:
sha256(be32(width) || be32(height) || RGB bytes).
"""
import hashlib
import pathlib
import struct

from PIL import Image, ImageDraw

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "fixtures"

BOAT = (
    "A large white wooden boat floats on calm turquoise water in the center of the photo. "
    "The huge pale blue sky fills the upper half, with small soft clouds near the top left corner. "
    "A medium red stripe runs along the hull of the boat, and a small brown mast rises from the middle deck. "
    "On the left, a medium green hill slopes down toward the shoreline, covered with dark pine trees. "
    "On the right, a small yellow buoy bobs beside a narrow grey pier that extends from the bottom right corner. "
    "The stern of the boat is rounded and faces the viewer; the interior of the boat is painted light teal. "
    "Gentle ripples reflect golden afternoon sunlight across the water."
)

LANTERN = (
    "Medium paper lanterns hang from a dark wooden beam across the top of the photo, glowing warm orange. "
    "Below them, a narrow cobblestone street recedes toward a small red gate in the distance. "
    "Tall brick houses with green shutters line both sides of the street."
)


def content_hash(img: Image.Image) -> str:
    img = img.convert("RGB")
    w, h = img.size
    return hashlib.sha256(struct.pack(">II", w, h) + img.tobytes()).hexdigest()


def boat(side=1024):
    img = Image.new("RGB", (side, side))
    d = ImageDraw.Draw(img)
    for y in range(side // 2):
        shade = 170 + (y * 60) // (side // 2)
        d.line([(0, y), (side, y)], fill=(120, 180, min(255, shade)))
    d.rectangle([0, side // 2, side, side], fill=(40, 170, 170))
    d.polygon([(0, side // 2), (300, 330), (420, side // 2)], fill=(50, 120, 60))
    d.polygon([(330, 600), (700, 600), (640, 690), (390, 690)], fill=(245, 245, 240))
    d.rectangle([350, 620, 690, 640], fill=(200, 40, 40))
    d.rectangle([505, 380, 520, 600], fill=(110, 70, 40))
    d.ellipse([820, 640, 850, 670], fill=(240, 210, 30))
    d.rectangle([760, 800, side, 830], fill=(130, 130, 130))
    return img


def lantern(side=1024):
    img = Image.new("RGB", (side, side), (60, 40, 40))
    d = ImageDraw.Draw(img)
    d.rectangle([0, 60, side, 90], fill=(70, 45, 20))
    for i in range(6):
        x = 80 + i * 160
        d.ellipse([x, 110, x + 90, 220], fill=(250, 150, 40))
    d.polygon([(300, side), (724, side), (540, 520), (484, 520)], fill=(120, 120, 110))
    d.rectangle([490, 480, 534, 520], fill=(190, 30, 30))
    return img


def main():
    (ROOT / "images").mkdir(parents=True, exist_ok=True)
    for name, make, text in (("boat", boat, BOAT), ("lanterns", lantern, LANTERN)):
        img = make()
        img.save(ROOT / "images" / f"{name}.png")
        (ROOT / f"{content_hash(img)}.txt").write_text(text + "\n")
        print(name, content_hash(img))


if __name__ == "__main__":
    main()
