#!/usr/bin/env python3
"""Regenerate the synthetic sample corpus in data/sample_corpus.

The levels use the raw VGLC character conventions of each game so that the
registry alias tables are exercised on ingestion. They are small stand-ins
for the real corpus, not copies of it.

    python3 data/gen_sample_corpus.py
"""
import os
import random

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "sample_corpus")


def write(game, name, rows):
    width = len(rows[0])
    assert all(len(r) == width for r in rows), name
    os.makedirs(os.path.join(ROOT, game), exist_ok=True)
    with open(os.path.join(ROOT, game, name + ".txt"), "w") as f:
        f.write("\n".join("".join(r) for r in rows) + "\n")


def blank(h, w, ch="-"):
    return [[ch] * w for _ in range(h)]


def smb_level(rng, width):
    h = 14
    g = blank(h, width)
    for c in range(width):
        g[12][c] = g[13][c] = "X"
    c = 8
    while c < width - 10:
        kind = rng.random()
        if kind < 0.2:
            gap = rng.randint(1, 3)
            for x in range(c, c + gap):
                g[12][x] = g[13][x] = "-"
            c += gap + rng.randint(3, 6)
        elif kind < 0.4:
            ph = rng.randint(2, 4)
            top = 12 - ph
            g[top][c], g[top][c + 1] = "<", ">"
            for r in range(top + 1, 12):
                g[r][c], g[r][c + 1] = "[", "]"
            c += 2 + rng.randint(3, 6)
        elif kind < 0.6:
            span = rng.randint(3, 6)
            for x in range(c, c + span):
                g[8][x] = rng.choice("SSS?Q")
            if rng.random() < 0.5:
                for x in range(c, c + span):
                    if rng.random() < 0.5:
                        g[4][x] = "S"
            if rng.random() < 0.6:
                g[7][c + span // 2] = "o"
            c += span + rng.randint(2, 5)
        elif kind < 0.75:
            g[11][c] = "E"
            if rng.random() < 0.4:
                g[11][c + 2] = "E"
            c += rng.randint(4, 7)
        elif kind < 0.85:
            ch = rng.randint(1, 2)
            g[11 - ch][c] = "B"
            for r in range(12 - ch, 12):
                g[r][c] = "b"
            c += rng.randint(4, 7)
        elif kind < 0.93:
            for x in range(c, c + 4):
                g[rng.randint(5, 9)][x] = "o"
            c += rng.randint(5, 8)
        else:
            steps = rng.randint(3, 5)
            for i in range(steps):
                for r in range(11 - i, 12):
                    g[r][c + i] = "X"
            c += steps + rng.randint(3, 6)
    return g


def ki_level(rng, height):
    w = 16
    g = blank(height, w)
    for r in range(height - 2, height):
        for c in range(w):
            g[r][c] = "#"
    for r in range(height):
        if rng.random() < 0.5:
            g[r][0] = "#"
        if rng.random() < 0.5:
            g[r][w - 1] = "#"
    r = height - 5
    while r > 2:
        span = rng.randint(3, 6)
        x = rng.randint(1, w - 1 - span)
        tile = rng.choice("##TTM")
        for c in range(x, x + span):
            g[r][c] = tile
        if tile != "M" and rng.random() < 0.3:
            g[r - 1][x + rng.randrange(span)] = "H"
        if rng.random() < 0.15:
            g[r - 1][x] = "D"
        if rng.random() < 0.5:
            span2 = rng.randint(2, 4)
            x2 = rng.randint(1, w - 1 - span2)
            for c in range(x2, x2 + span2):
                if g[r][c] == "-":
                    g[r][c] = "T"
        r -= rng.randint(3, 4)
    return g


def mm_horizontal(rng, width):
    h = 15
    g = blank(h, width)
    for c in range(width):
        g[13][c] = g[14][c] = "#"
        g[0][c] = "#"
    c = 6
    while c < width - 8:
        kind = rng.random()
        if kind < 0.15:
            gap = rng.randint(2, 3)
            for x in range(c, c + gap):
                g[13][x] = "-"
                g[14][x] = "H"
            c += gap + rng.randint(3, 5)
        elif kind < 0.3:
            top = rng.randint(5, 9)
            span = rng.randint(3, 5)
            for x in range(c, c + span):
                g[top][x] = rng.choice("##B")
            for r in range(top, 13):
                g[r][c + span] = "|"
            g[top - 1][c + 1] = rng.choice("LlWw+")
            c += span + rng.randint(3, 5)
        elif kind < 0.45:
            g[12][c] = rng.choice("EEC")
            c += rng.randint(3, 5)
        elif kind < 0.55:
            for x in range(c, c + 3):
                g[9][x] = "M"
            c += rng.randint(5, 7)
        elif kind < 0.65:
            for x in range(c, c + 2):
                g[rng.randint(7, 10)][x] = "A"
            c += rng.randint(4, 6)
        elif kind < 0.75:
            g[12][c] = rng.choice("LlWw+")
            c += rng.randint(2, 4)
        elif kind < 0.85:
            for r in range(1, 13):
                g[r][c] = "D" if r >= 10 else "#"
            c += rng.randint(3, 5)
        else:
            g[12][c] = "t"
            c += rng.randint(2, 4)
    g[12][1] = "P"
    return g


def mm_vertical(rng, height):
    w = 16
    g = blank(height, w)
    for r in range(height):
        g[r][0] = g[r][w - 1] = "#"
    for c in range(w):
        g[height - 1][c] = "#"
    ladder = rng.randint(3, 12)
    r = height - 2
    while r > 1:
        span = rng.randint(4, 8)
        x = rng.randint(1, w - 1 - span)
        for c in range(x, x + span):
            g[r][c] = rng.choice("###B")
        for rr in range(max(r - 4, 0), r + 1):
            g[rr][ladder] = "|"
        if rng.random() < 0.4:
            g[r - 1][x] = rng.choice("EHC")
        if rng.random() < 0.3:
            g[r - 1][x + span - 1] = rng.choice("LlWw+")
        ladder = rng.randint(3, 12)
        r -= 4
    return g


def mm_mixed(rng):
    # L-shaped map: horizontal strip on top, vertical shaft down the right.
    h, w = 45, 48
    g = blank(h, w, "@")
    top = mm_horizontal(rng, w)
    for r in range(15):
        g[r] = top[r][:]
    shaft = mm_vertical(rng, 30)
    for r in range(30):
        for c in range(16):
            g[15 + r][w - 16 + c] = shaft[r][c]
    for c in range(w - 15, w - 1):
        g[13][c] = g[14][c] = "-"
    return g


def met_room(rng):
    g = blank(15, 16)
    for c in range(16):
        g[0][c] = g[14][c] = "#"
    for r in range(15):
        g[r][0] = g[r][15] = "#"
    for r in range(rng.choice([3, 6, 9]), 15, 4):
        if r >= 14:
            break
        span = rng.randint(3, 7)
        x = rng.randint(1, 15 - span)
        for c in range(x, x + span):
            g[r][c] = rng.choice("###B")
        if rng.random() < 0.35:
            g[r - 1][x + rng.randrange(span)] = "E"
    if rng.random() < 0.4:
        for c in range(1, 15):
            g[13][c] = "H" if rng.random() < 0.5 else g[13][c]
    if rng.random() < 0.25:
        g[rng.randint(2, 10)][rng.randint(2, 13)] = "M"
    return g


def met_map(rng, rows, cols):
    h, w = rows * 15, cols * 16
    g = blank(h, w, "@")
    layout = [[rng.random() < 0.75 for _ in range(cols)] for _ in range(rows)]
    layout[rows - 1][0] = True
    for rr in range(rows):
        for cc in range(cols):
            if not layout[rr][cc]:
                continue
            room = met_room(rng)
            # doors into horizontal neighbours, shafts into vertical ones
            if cc + 1 < cols and layout[rr][cc + 1]:
                for r in range(10, 13):
                    room[r][15] = "D"
            if cc > 0 and layout[rr][cc - 1]:
                for r in range(10, 13):
                    room[r][0] = "D"
            if rr + 1 < rows and layout[rr + 1][cc]:
                for c in range(6, 10):
                    room[14][c] = "-"
            if rr > 0 and layout[rr - 1][cc]:
                for c in range(6, 10):
                    room[0][c] = "-"
            for r in range(15):
                for c in range(16):
                    g[rr * 15 + r][cc * 16 + c] = room[r][c]
    return g


def main():
    rng = random.Random(20211)
    for i, width in enumerate([96, 120, 80], start=1):
        write("smb", "mario-%d-1" % i, smb_level(rng, width))
    for i, height in enumerate([64, 80, 56], start=1):
        write("ki", "kidicarus_%d" % i, ki_level(rng, height))
    write("mm", "megaman_1", mm_horizontal(rng, 100))
    write("mm", "megaman_2", mm_vertical(rng, 60))
    write("mm", "megaman_3", mm_mixed(rng))
    write("met", "metroid_1", met_map(rng, 2, 3))
    write("met", "metroid_2", met_map(rng, 2, 2))
    write("met", "metroid_3", met_map(rng, 3, 4))


if __name__ == "__main__":
    main()
