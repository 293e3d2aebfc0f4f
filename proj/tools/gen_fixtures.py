#!/usr/bin/env python3
"""Regenerates everything under fixtures/.

Images, datasets, model scripts and taxonomy snippets are written directly.
With --visloop the trace corpora under fixtures/traces/ are produced by
running `visloop bench` with the mock model and mock kernel.
"""

import argparse
import json
import math
import shutil
import subprocess
from pathlib import Path

from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent / "fixtures"


def fence(code):
    return "<code>\n```python\n" + code.strip("\n") + "\n```\n</code>"


def answer(text):
    return "<answer>\n\\boxed{" + text + "}\n</answer>"


def write_json(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows))


# ------------------------------------------------------------------ images

def disk(draw, cx, cy, r, fill):
    draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=fill)


def ebbinghaus(path):
    img = Image.new("RGB", (480, 240), "white")
    d = ImageDraw.Draw(img)
    orange = (242, 140, 40)
    grey = (150, 150, 160)
    for k in range(6):
        a = 2 * math.pi * k / 6
        disk(d, 120 + 72 * math.cos(a), 120 + 72 * math.sin(a), 32, grey)
    for k in range(8):
        a = 2 * math.pi * k / 8
        disk(d, 360 + 38 * math.cos(a), 120 + 38 * math.sin(a), 9, grey)
    disk(d, 120, 120, 22, orange)
    disk(d, 360, 120, 22, orange)
    img.save(path, optimize=False)


def scene(path, seed):
    # A plain scene with one small coloured target, in the spirit of
    # high-resolution search benchmarks.
    w, h = 320, 240
    img = Image.new("RGB", (w, h), (200 + seed % 40, 210, 190))
    d = ImageDraw.Draw(img)
    for y in range(0, h, 24):
        d.line([(0, y), (w, y + 12)], fill=(170, 180, 160), width=1)
    x0, y0 = 30 + (seed * 53) % 240, 20 + (seed * 31) % 180
    colours = [(220, 30, 30), (30, 60, 220), (30, 160, 60), (240, 200, 20)]
    d.rectangle([x0, y0, x0 + 14, y0 + 10], fill=colours[seed % 4])
    img.save(path, optimize=False)


def tile(path, rgb):
    Image.new("RGB", (32, 24), rgb).save(path, optimize=False)


# ------------------------------------------------------------------ scripts

EBBINGHAUS_SCRIPT = [
    "The two orange discs are surrounded by grey circles of very different sizes. "
    "Context like this can make equal discs look different, so I will measure them.\n"
    + fence(
        """
left = image_clue_0.crop((90, 90, 150, 150))
right = image_clue_0.crop((330, 90, 390, 150))
print("crop sizes:", left.size, right.size)
# probe the horizontal radius: inside at 21 px, outside at 23 px
print("left edge:", left.getpixel((30 + 21, 30)), left.getpixel((30 + 23, 30)))
print("right edge:", right.getpixel((30 + 21, 30)), right.getpixel((30 + 23, 30)))
r = 22
print(f"estimated diameter: {2 * r} px each, area ratio {(r * r) / (r * r):.2f}")
"""
    ),
    "Both discs are orange out to 21 px and background at 23 px, so their radii agree. "
    "Let me look at both crops side by side to be sure.\n"
    + fence(
        """
import matplotlib.pyplot as plt
plt.imshow(left)
plt.show()
plt.imshow(right)
plt.show()
"""
    ),
    "The crops confirm it: both discs have a diameter of about 44 px. "
    "The left one only looks smaller because of its large neighbours.\n" + answer("same"),
]

# Twenty items for the metric checks: (id, block layout per turn, predicted,
# gold, choices). An empty layout with predicted None means the model script
# is empty and the session faults.
REPLAY20 = [
    ("r01", [], "4", "4", None),
    ("r02", [1, 1], "3.0", "3", None),
    ("r03", [1], "(B)", "B", ["cat", "dog", "bird"]),
    ("r04", [2, 1], "red", "blue", None),
    ("r05", [], "0.5", "1/2", None),
    ("r06", [1], "Yes.", "yes", None),
    ("r07", [1], "left", "right", None),
    ("r08", [2], "cat", "\"Cat\"", None),
    ("r09", [], "7", "8", None),
    ("r10", [2, 2], "12", "12", None),
    ("r11", [1], "the red car", "The  red car", None),
    ("r12", [], "A", "C", ["one", "two", "three"]),
    ("r13", [1, 1], "2", "2", None),
    ("r14", [1], "circle", "circle", None),
    ("r15", [1, 1, 1], "5", "6", None),
    ("r16", [], "purple", "purple", None),
    ("r17", [1], "9", "9", None),
    ("r18", [2], "0.25", "0.3", None),
    ("r19", [1], "square", "square", None),
    ("r20", [], None, "blue", None),
]

SNIPPETS = [
    "w, h = image_clue_0.size\nprint(w * h)",
    "print(image_clue_0.getpixel((3, 4)))",
    "total = 0\ntotal += 2 ** 5\nprint(total)",
    "half = image_clue_0.resize((16, 12))\nprint(half.size)",
    "print(f\"{7 / 3:.3f}\")",
    "import math\nprint(math.sqrt(144))",
]


def replay20(base):
    rows, scripts = [], {}
    k = 0
    for item_id, layout, predicted, gold, choices in REPLAY20:
        row = {"id": item_id, "images": ["../images/tile_%s.png" % item_id],
               "question": "Synthetic question %s?" % item_id, "answer": gold}
        if choices:
            row["choices"] = choices
        rows.append(row)
        turns = []
        for n_blocks in layout:
            body = "Checking.\n"
            for _ in range(n_blocks):
                body += fence(SNIPPETS[k % len(SNIPPETS)]) + "\n"
                k += 1
            turns.append(body)
        if predicted is not None:
            turns.append(answer(predicted))
        scripts[item_id] = turns
        tile(base / "images" / ("tile_%s.png" % item_id), (10 * int(item_id[1:]), 90, 200))
    write_jsonl(base / "datasets" / "replay20.jsonl", rows)
    write_json(base / "scripts" / "replay20.json", {"items": scripts})


def replay5(base):
    items = [
        ("q1", "How many pixels wide is the image?", "32", ["w, h = image_clue_0.size\nprint(w)"], "32", "30"),
        ("q2", "What is the red channel of the top-left pixel?", "250",
         ["print(image_clue_0.getpixel((0, 0))[0])"], "250", "255"),
        ("q3", "What is the image area?", "768", ["w, h = image_clue_0.size\nprint(w * h)"], "768", "768"),
        ("q4", "Is the image wider than tall?", "yes", ["print(image_clue_0.width > image_clue_0.height)"],
         "yes", "no"),
        ("q5", "What is the height?", "24", [], "24", "24"),
    ]
    rows, agent, cot = [], {}, {}
    for i, (item_id, question, gold, codes, agent_pred, cot_pred) in enumerate(items):
        tile(base / "images" / ("tile_%s.png" % item_id), (250, 40 * i, 20))
        rows.append({"id": item_id, "images": ["../images/tile_%s.png" % item_id],
                     "question": question, "answer": gold})
        agent[item_id] = ["Let me check.\n" + fence(c) for c in codes] + [answer(agent_pred)]
        cot[item_id] = ["Looking at the picture, " + answer(cot_pred)]
    write_jsonl(base / "datasets" / "replay5.jsonl", rows)
    write_json(base / "scripts" / "replay5_agent.json", {"items": agent})
    write_json(base / "scripts" / "replay5_cot.json", {"items": cot})


# Trace corpora for the analysis pipeline.
def corpus_vstar(base):
    rows, scripts = [], {}
    for i in range(10):
        item_id = "v%02d" % i
        scene(base / "images" / ("scene_%s.png" % item_id), i)
        rows.append({"id": item_id, "images": ["../images/scene_%s.png" % item_id],
                     "question": "What is the colour of the small square?", "answer": "red"})
        x0, y0 = 30 + (i * 53) % 240, 20 + (i * 31) % 180
        turns = ["The target is small; I will zoom in.\n" + fence(
            "import matplotlib.pyplot as plt\nzoom = image_clue_0.crop((%d, %d, %d, %d))\n"
            "zoom = zoom.resize((128, 96))\nplt.imshow(zoom)\nplt.show()" % (max(0, x0 - 20), max(0, y0 - 15),
                                                                            x0 + 34, y0 + 25))]
        if i in (3, 7):
            turns.append("A tighter crop.\n" + fence(
                "tight = image_clue_0.crop((%d, %d, %d, %d))\nprint(tight.size)" % (x0, y0, x0 + 15, y0 + 11)))
        if i == 5:
            turns.append("Average the colour.\n" + fence(
                "import numpy as np\nprint(np.mean(image_clue_0.getpixel((%d, %d))))" % (x0 + 5, y0 + 5)))
        turns.append(answer(["red", "blue", "green", "yellow"][i % 4]))
        scripts[item_id] = turns
    write_jsonl(base / "datasets" / "vstar_style.jsonl", rows)
    write_json(base / "scripts" / "vstar_style.json", {"items": scripts})


def corpus_blind(base):
    codes = [
        "from PIL import ImageDraw\nimport matplotlib.pyplot as plt\ncanvas = image_clue_0.copy()\n"
        "draw = ImageDraw.Draw(canvas)\ndraw.line([(0, 0), (31, 23)], fill='red', width=1)\n"
        "plt.imshow(canvas)\nplt.show()",
        "from PIL import ImageDraw\ncanvas = image_clue_0.copy()\ndraw = ImageDraw.Draw(canvas)\n"
        "draw.rectangle([4, 4, 20, 16], outline='blue')\ndraw.text((2, 2), 'A', fill='blue')\nprint(canvas.size)",
        "import math\nprint(math.hypot(12, 5))",
        "import matplotlib.pyplot as plt\nplt.plot([0, 10], [0, 10])\nplt.axhline(5)\nplt.show()",
    ]
    rows, scripts = [], {}
    for i in range(8):
        item_id = "b%02d" % i
        tile(base / "images" / ("tile_%s.png" % item_id), (255, 255, 255 - 20 * i))
        rows.append({"id": item_id, "images": ["../images/tile_%s.png" % item_id],
                     "question": "How many times do the lines intersect?", "answer": str(i % 3)})
        scripts[item_id] = ["Sketch it.\n" + fence(codes[i % 4]), answer(str((i + 1) % 3))]
    write_jsonl(base / "datasets" / "blind_style.jsonl", rows)
    write_json(base / "scripts" / "blind_style.json", {"items": scripts})


def corpus_nocode(base):
    rows, scripts = [], {}
    for i in range(3):
        item_id = "n%02d" % i
        rows.append({"id": item_id, "images": ["../images/tile_q1.png"],
                     "question": "Is this a tile?", "answer": "yes"})
        scripts[item_id] = [answer("yes")]
    write_jsonl(base / "datasets" / "nocode.jsonl", rows)
    write_json(base / "scripts" / "nocode.json", {"items": scripts})


# ------------------------------------------------------------------ taxonomy

TAXONOMY = {
    "crop.py": ("cropping", """
import matplotlib.pyplot as plt
# zoom in on the upper-left quadrant where the sign is
w, h = image_clue_0.size
region = image_clue_0.crop((0, 0, w // 2, h // 2))
plt.imshow(region)
plt.axis('off')
plt.show()
"""),
    "rotate.py": ("rotation", """
import matplotlib.pyplot as plt
# the photo is upside down
upright = image_clue_0.rotate(180)
plt.imshow(upright)
plt.show()
"""),
    "enhance.py": ("enhancement", """
from PIL import ImageEnhance
import matplotlib.pyplot as plt
boosted = ImageEnhance.Contrast(image_clue_0).enhance(2.5)
plt.imshow(boosted)
plt.show()
"""),
    "segment.py": ("segmentation", """
import numpy as np
import cv2
from sklearn.cluster import KMeans
from scipy import ndimage

arr = np.array(image_clue_0.convert('RGB'))
gray = cv2.cvtColor(arr, cv2.COLOR_RGB2GRAY)
_, mask = cv2.threshold(gray, 0, 255, cv2.THRESH_BINARY + cv2.THRESH_OTSU)
km = KMeans(n_clusters=3, n_init=10, random_state=0).fit(arr.reshape(-1, 3).astype(float))
colour_labels = km.labels_.reshape(gray.shape)
objects, count = ndimage.label(mask > 0)
sizes = ndimage.sum(mask > 0, objects, range(1, count + 1))
kept = [s for s in sizes if s > 50]
print(count, len(kept))
"""),
    "detect.py": ("detection", """
import cv2
import numpy as np
import matplotlib.pyplot as plt

arr = np.array(image_clue_0)
edges = cv2.Canny(cv2.cvtColor(arr, cv2.COLOR_RGB2GRAY), 50, 150)
contours, _ = cv2.findContours(edges, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
x, y, w, h = cv2.boundingRect(max(contours, key=cv2.contourArea))
# crop around the detected object
plt.imshow(arr[y:y + h, x:x + w])
plt.show()
"""),
    "ocr.py": ("ocr", """
import easyocr
import numpy as np
reader = easyocr.Reader(['en'])
for box, text, conf in reader.readtext(np.array(image_clue_0)):
    print(text, round(conf, 2))
"""),
    "marks.py": ("render_marks", """
from PIL import ImageDraw
import matplotlib.pyplot as plt
canvas = image_clue_0.copy()
draw = ImageDraw.Draw(canvas)
# box the candidate by hand
draw.rectangle([120, 40, 260, 150], outline='red', width=3)
draw.text((124, 20), 'candidate A', fill='red')
plt.imshow(canvas)
plt.show()
"""),
    "lines.py": ("render_lines", """
from PIL import ImageDraw
import matplotlib.pyplot as plt
canvas = image_clue_0.copy()
draw = ImageDraw.Draw(canvas)
draw.line([(40, 200), (300, 60)], fill='blue', width=2)
draw.line([(40, 60), (300, 200)], fill='blue', width=2)
plt.imshow(canvas)
plt.show()
"""),
    "histogram.py": ("image_histogram", """
import numpy as np
import matplotlib.pyplot as plt
gray = np.array(image_clue_0.convert('L'))
plt.hist(gray.ravel(), bins=64)
plt.title('brightness')
plt.show()
"""),
    "numerical.py": ("numerical_analysis", """
import numpy as np
arr = np.array(image_clue_0)
patch = arr[100:140, 60:120]
print('mean colour of the area:', patch.reshape(-1, 3).mean(axis=0))
"""),
}


def taxonomy(base):
    out = base / "taxonomy"
    out.mkdir(parents=True, exist_ok=True)
    labels = {}
    for name, (label, code) in TAXONOMY.items():
        (out / name).write_text(code.lstrip("\n"))
        labels[name] = label
    write_json(out / "labels.json", labels)


# ------------------------------------------------------------------ traces

def traces(base, visloop):
    # Relative paths keep the echoed config in each trace machine-independent.
    runs = [("vstar_style", "vstar"), ("blind_style", "blind"), ("nocode", "nocode")]
    scratch = base / "_gen"
    try:
        for dataset, corpus in runs:
            subprocess.run([str(Path(visloop).resolve()), "bench", "--dataset", "datasets/%s.jsonl" % dataset,
                            "--mock-model", "scripts/%s.json" % dataset, "--mock-kernel", "--no-timing",
                            "--timeout", "10", "-o", "_gen/" + corpus], check=True, cwd=base,
                           stdout=subprocess.DEVNULL)
            dest = base / "traces" / corpus
            shutil.rmtree(dest, ignore_errors=True)
            shutil.copytree(scratch / corpus / "traces", dest)
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--visloop", help="path to the built visloop binary; regenerates the trace corpora")
    args = ap.parse_args()
    (ROOT / "images").mkdir(parents=True, exist_ok=True)
    ebbinghaus(ROOT / "images" / "ebbinghaus.png")
    write_json(ROOT / "scripts" / "ebbinghaus.json", EBBINGHAUS_SCRIPT)
    replay20(ROOT)
    replay5(ROOT)
    corpus_vstar(ROOT)
    corpus_blind(ROOT)
    corpus_nocode(ROOT)
    taxonomy(ROOT)
    if args.visloop:
        traces(ROOT, args.visloop)


if __name__ == "__main__":
    main()
