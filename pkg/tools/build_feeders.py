"""Generate the bundled IEEE 13/34/37/123-bus network files.

Run from the repository root::

    python3 tools/build_feeders.py

Conventions (see README, "Bundled feeders"):

* Impedances come from the published configuration tables (ohm/mile and
  microsiemens/mile), scaled by segment length.
* Transformers become series impedances referred to the primary side.
* Closed switches become 10 ft of a three-phase overhead configuration;
  open switches and the buses only they reach are dropped.
* Regulators are ignored (their segments are ordinary lines); the substation
  voltage is the only fixed voltage.
* Distributed loads are split in two identical halves at the segment ends.
* Delta loads split each leg evenly over its two phases; every load model
  (PQ, I, Z) is taken as constant power at nominal voltage.
* Line charging is split between both ends (pi model) and linearised to a
  constant reactive injection at nominal balanced voltage.
* Shunt capacitors become controllable capacitor devices, ``0 <= q <= qmax``.

Bus ids follow breadth-first order from the substation, visiting children by
ascending original label; the original label is kept as the bus name.
"""
from __future__ import annotations

import json
from collections import deque
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "radialopf" / "data"
FT_PER_MILE = 5280.0
BASE_POWER = 1e6  # VA per phase
ALPHA = np.exp(-2j * np.pi / 3)
GAMMA = np.array([[1, ALPHA ** 2, ALPHA], [ALPHA, 1, ALPHA ** 2], [ALPHA ** 2, ALPHA, 1]])
IDX = {"a": 0, "b": 1, "c": 2}


def sym(diag, off):
    """3x3 symmetric from diagonal (aa, bb, cc) and off-diagonal (ab, ac, bc)."""
    aa, bb, cc = diag
    ab, ac, bc = off
    return np.array([[aa, ab, ac], [ab, bb, bc], [ac, bc, cc]])


def partial(phases, entries):
    """3x3 with only ``phases`` populated; ``entries`` maps 'xy' -> value."""
    m = np.zeros((3, 3), complex)
    for key, val in entries.items():
        i, j = IDX[key[0]], IDX[key[1]]
        m[i, j] = m[j, i] = val
    return phases, m


# -- configurations: (phases, Z ohm/mile 3x3, B uS/mile 3x3) ---------------------

C13 = {
    601: ("abc", sym((0.3465 + 1.0179j, 0.3375 + 1.0478j, 0.3414 + 1.0348j),
                     (0.1560 + 0.5017j, 0.1580 + 0.4236j, 0.1535 + 0.3849j)),
          sym((6.2998, 5.9597, 5.6386), (-1.9958, -1.2595, -0.7417))),
    602: ("abc", sym((0.7526 + 1.1814j, 0.7475 + 1.1983j, 0.7436 + 1.2112j),
                     (0.1580 + 0.4236j, 0.1560 + 0.5017j, 0.1535 + 0.3849j)),
          sym((5.6990, 5.1795, 5.4246), (-1.0817, -1.6905, -0.6588))),
    603: ("bc",) + (partial("bc", {"bb": 1.3294 + 1.3471j, "bc": 0.2066 + 0.4591j, "cc": 1.3238 + 1.3569j})[1],
                    partial("bc", {"bb": 4.7097, "bc": -0.8999, "cc": 4.6658})[1]),
    604: ("ac",) + (partial("ac", {"aa": 1.3238 + 1.3569j, "ac": 0.2066 + 0.4591j, "cc": 1.3294 + 1.3471j})[1],
                    partial("ac", {"aa": 4.6658, "ac": -0.8999, "cc": 4.7097})[1]),
    605: ("c",) + (partial("c", {"cc": 1.3292 + 1.3475j})[1], partial("c", {"cc": 4.5193})[1]),
    606: ("abc", sym((0.7982 + 0.4463j, 0.7891 + 0.4041j, 0.7982 + 0.4463j),
                     (0.3192 + 0.0328j, 0.2849 - 0.0143j, 0.3192 + 0.0328j)),
          np.diag([96.8897] * 3)),
    607: ("a",) + (partial("a", {"aa": 1.3425 + 0.5124j})[1], partial("a", {"aa": 88.9912})[1]),
}

C34 = {
    300: ("abc", sym((1.3368 + 1.3343j, 1.3238 + 1.3569j, 1.3294 + 1.3471j),
                     (0.2101 + 0.5779j, 0.2130 + 0.5015j, 0.2066 + 0.4591j)),
          sym((5.3350, 5.0979, 4.8880), (-1.5313, -0.9943, -0.6212))),
    301: ("abc", sym((1.9300 + 1.4115j, 1.9157 + 1.4281j, 1.9219 + 1.4209j),
                     (0.2327 + 0.6442j, 0.2359 + 0.5691j, 0.2288 + 0.5238j)),
          sym((5.1207, 4.9055, 4.7154), (-1.4364, -0.9402, -0.5951))),
    302: ("a",) + (partial("a", {"aa": 2.7995 + 1.4855j})[1], partial("a", {"aa": 4.2251})[1]),
    303: ("b",) + (partial("b", {"bb": 2.7995 + 1.4855j})[1], partial("b", {"bb": 4.2251})[1]),
    304: ("b",) + (partial("b", {"bb": 1.9217 + 1.4212j})[1], partial("b", {"bb": 4.3637})[1]),
}

C37 = {
    721: ("abc", sym((0.2926 + 0.1973j, 0.2646 + 0.1900j, 0.2926 + 0.1973j),
                     (0.0673 - 0.0368j, 0.0337 - 0.0417j, 0.0673 - 0.0368j)),
          np.diag([159.7919] * 3)),
    722: ("abc", sym((0.4751 + 0.2973j, 0.4488 + 0.2678j, 0.4751 + 0.2973j),
                     (0.1629 - 0.0326j, 0.1234 - 0.0607j, 0.1629 - 0.0326j)),
          np.diag([127.8306] * 3)),
    723: ("abc", sym((1.2936 + 0.6713j, 1.3022 + 0.6326j, 1.2936 + 0.6713j),
                     (0.4871 + 0.2111j, 0.4585 + 0.1521j, 0.4871 + 0.2111j)),
          np.diag([74.8405] * 3)),
    724: ("abc", sym((2.0952 + 0.7758j, 2.1068 + 0.7398j, 2.0952 + 0.7758j),
                     (0.5204 + 0.2738j, 0.4926 + 0.2123j, 0.5204 + 0.2738j)),
          np.diag([60.2483] * 3)),
}

_ZA, _ZB, _ZC = 0.4576 + 1.0780j, 0.4666 + 1.0482j, 0.4615 + 1.0651j
_M1, _M2, _M3 = 0.1560 + 0.5017j, 0.1535 + 0.3849j, 0.1580 + 0.4236j
_BA, _BB, _BC = 5.6765, 5.9809, 5.3971
_N1, _N2, _N3 = -1.8319, -0.6982, -1.1645


def _c123(order):
    """Configurations 1-6 are one conductor set with permuted phase positions.
    ``order`` lists which of the three physical positions (A, B, C of config 1)
    carries phases a, b, c."""
    zs, bs = [_ZA, _ZB, _ZC], [_BA, _BB, _BC]
    zm = {frozenset((0, 1)): _M1, frozenset((0, 2)): _M2, frozenset((1, 2)): _M3}
    bm = {frozenset((0, 1)): _N1, frozenset((0, 2)): _N2, frozenset((1, 2)): _N3}
    Z = np.zeros((3, 3), complex)
    B = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            pi, pj = order[i], order[j]
            Z[i, j] = zs[pi] if i == j else zm[frozenset((pi, pj))]
            B[i, j] = bs[pi] if i == j else bm[frozenset((pi, pj))]
    return "abc", Z, B


C123 = {
    1: _c123((0, 1, 2)),
    2: _c123((2, 0, 1)),
    3: _c123((1, 2, 0)),
    4: _c123((2, 1, 0)),
    5: _c123((1, 0, 2)),
    6: _c123((0, 2, 1)),
    7: ("ac",) + (partial("ac", {"aa": _ZA, "ac": _M2, "cc": _ZC})[1],
                  partial("ac", {"aa": 5.1154, "ac": -1.0549, "cc": 5.1704})[1]),
    8: ("ab",) + (partial("ab", {"aa": _ZA, "ab": _M2, "bb": _ZC})[1],
                  partial("ab", {"aa": 5.1154, "ab": -1.0549, "bb": 5.1704})[1]),
    9: ("a",) + (partial("a", {"aa": 1.3292 + 1.3475j})[1], partial("a", {"aa": 4.5193})[1]),
    10: ("b",) + (partial("b", {"bb": 1.3292 + 1.3475j})[1], partial("b", {"bb": 4.5193})[1]),
    11: ("c",) + (partial("c", {"cc": 1.3292 + 1.3475j})[1], partial("c", {"cc": 4.5193})[1]),
    12: ("abc", sym((1.5209 + 0.7521j, 1.5329 + 0.7162j, 1.5209 + 0.7521j),
                    (0.5198 + 0.2775j, 0.4924 + 0.2157j, 0.5198 + 0.2775j)),
         np.diag([67.2242] * 3)),
}


def transformer(kva, kv_ll, r_pct, x_pct):
    zb = kv_ll ** 2 / (kva / 1000.0)
    return ("abc", np.eye(3) * (r_pct + 1j * x_pct) / 100.0 * zb, np.zeros((3, 3)))


# -- feeder tables ----------------------------------------------------------------
# segments: (from, to, feet, config); loads: bus -> {"Y"|"D": [(p,q) a/ab, b/bc, c/ca]}
# distributed: (from, to, conn, [(p,q) x3]); caps: bus -> [kvar a, b, c]

F13 = dict(
    name="ieee13", kv_ll=4.16, root=650, configs=C13, switch_config=601,
    segments=[
        (650, 632, 2000, 601), (632, 633, 500, 602), (633, 634, 0, "XFM"),
        (632, 645, 500, 603), (645, 646, 300, 603), (632, 671, 2000, 601),
        (671, 684, 300, 604), (684, 611, 300, 605), (684, 652, 800, 607),
        (671, 692, 0, "SWITCH"), (692, 675, 500, 606), (671, 680, 1000, 601),
    ],
    transformers={(633, 634): transformer(500, 4.16, 1.1, 2.0)},
    loads={
        634: ("Y", [(160, 110), (120, 90), (120, 90)]),
        645: ("Y", [(0, 0), (170, 125), (0, 0)]),
        646: ("D", [(0, 0), (230, 132), (0, 0)]),
        652: ("Y", [(128, 86), (0, 0), (0, 0)]),
        671: ("D", [(385, 220), (385, 220), (385, 220)]),
        675: ("Y", [(485, 190), (68, 60), (290, 212)]),
        692: ("D", [(0, 0), (0, 0), (170, 151)]),
        611: ("Y", [(0, 0), (0, 0), (170, 80)]),
    },
    distributed=[(632, 671, "Y", [(17, 10), (66, 38), (117, 68)])],
    caps={675: [200, 200, 200], 611: [0, 0, 100]},
)

F34 = dict(
    name="ieee34", kv_ll=24.9, root=800, configs=C34, switch_config=300,
    segments=[
        (800, 802, 2580, 300), (802, 806, 1730, 300), (806, 808, 32230, 300),
        (808, 810, 5804, 303), (808, 812, 37500, 300), (812, 814, 29730, 300),
        (814, 850, 10, 301), (816, 818, 1710, 302), (816, 824, 10210, 301),
        (818, 820, 48150, 302), (820, 822, 13740, 302), (824, 826, 3030, 303),
        (824, 828, 840, 301), (828, 830, 20440, 301), (830, 854, 520, 301),
        (832, 858, 4900, 301), (832, 888, 0, "XFM"), (834, 860, 2020, 301),
        (834, 842, 280, 301), (836, 840, 860, 301), (836, 862, 280, 301),
        (842, 844, 1350, 301), (844, 846, 3640, 301), (846, 848, 530, 301),
        (850, 816, 310, 301), (852, 832, 10, 301), (854, 856, 23330, 303),
        (854, 852, 36830, 301), (858, 864, 1620, 302), (858, 834, 5830, 301),
        (860, 836, 2680, 301), (862, 838, 4860, 304), (888, 890, 10560, 300),
    ],
    transformers={(832, 888): transformer(500, 24.9, 1.9, 4.08)},
    loads={
        860: ("Y", [(20, 16), (20, 16), (20, 16)]),
        840: ("Y", [(9, 7), (9, 7), (9, 7)]),
        844: ("Y", [(135, 105), (135, 105), (135, 105)]),
        848: ("D", [(20, 16), (20, 16), (20, 16)]),
        890: ("D", [(150, 75), (150, 75), (150, 75)]),
        830: ("D", [(10, 5), (10, 5), (25, 10)]),
    },
    distributed=[
        (802, 806, "Y", [(0, 0), (30, 15), (25, 14)]),
        (808, 810, "Y", [(0, 0), (16, 8), (0, 0)]),
        (818, 820, "Y", [(34, 17), (0, 0), (0, 0)]),
        (820, 822, "Y", [(135, 70), (0, 0), (0, 0)]),
        (816, 824, "D", [(0, 0), (5, 2), (0, 0)]),
        (824, 826, "Y", [(0, 0), (40, 20), (0, 0)]),
        (824, 828, "Y", [(0, 0), (0, 0), (4, 2)]),
        (828, 830, "Y", [(7, 3), (0, 0), (0, 0)]),
        (854, 856, "Y", [(0, 0), (4, 2), (0, 0)]),
        (832, 858, "D", [(7, 3), (2, 1), (6, 3)]),
        (858, 864, "Y", [(2, 1), (0, 0), (0, 0)]),
        (858, 834, "D", [(4, 2), (15, 8), (13, 7)]),
        (834, 860, "D", [(16, 8), (20, 10), (110, 55)]),
        (860, 836, "D", [(30, 15), (10, 6), (42, 22)]),
        (836, 840, "D", [(18, 9), (22, 11), (0, 0)]),
        (862, 838, "Y", [(0, 0), (28, 14), (0, 0)]),
        (842, 844, "Y", [(9, 5), (0, 0), (0, 0)]),
        (844, 846, "Y", [(0, 0), (25, 12), (20, 11)]),
        (846, 848, "Y", [(0, 0), (23, 11), (0, 0)]),
    ],
    caps={844: [100, 100, 100], 848: [150, 150, 150]},
)

F37 = dict(
    name="ieee37", kv_ll=4.8, root=799, configs=C37, switch_config=721,
    segments=[
        (701, 702, 960, 722), (702, 705, 400, 724), (702, 713, 360, 723),
        (702, 703, 1320, 722), (703, 727, 240, 724), (703, 730, 600, 723),
        (704, 714, 80, 724), (704, 720, 800, 723), (705, 742, 320, 724),
        (705, 712, 240, 724), (706, 725, 280, 724), (707, 724, 760, 724),
        (707, 722, 120, 724), (708, 733, 320, 723), (708, 732, 320, 724),
        (709, 731, 600, 723), (709, 708, 320, 723), (710, 735, 200, 724),
        (710, 736, 1280, 724), (711, 741, 400, 723), (711, 740, 200, 724),
        (713, 704, 520, 723), (714, 718, 520, 724), (720, 707, 920, 724),
        (720, 706, 600, 723), (727, 744, 280, 723), (730, 709, 200, 723),
        (733, 734, 560, 723), (734, 737, 640, 723), (734, 710, 520, 724),
        (737, 738, 400, 723), (738, 711, 400, 723), (744, 728, 200, 724),
        (744, 729, 280, 724), (775, 709, 0, "XFM"), (799, 701, 1850, 721),
    ],
    transformers={(709, 775): transformer(500, 4.8, 0.09, 1.81)},
    loads={
        701: ("D", [(140, 70), (140, 70), (350, 175)]),
        712: ("D", [(0, 0), (0, 0), (85, 40)]),
        713: ("D", [(0, 0), (0, 0), (85, 40)]),
        714: ("D", [(17, 8), (21, 10), (0, 0)]),
        718: ("D", [(85, 40), (0, 0), (0, 0)]),
        720: ("D", [(0, 0), (0, 0), (85, 40)]),
        722: ("D", [(0, 0), (140, 70), (21, 10)]),
        724: ("D", [(0, 0), (42, 21), (0, 0)]),
        725: ("D", [(0, 0), (42, 21), (0, 0)]),
        727: ("D", [(0, 0), (0, 0), (42, 21)]),
        728: ("D", [(42, 21), (42, 21), (42, 21)]),
        729: ("D", [(42, 21), (0, 0), (0, 0)]),
        730: ("D", [(0, 0), (0, 0), (85, 40)]),
        731: ("D", [(0, 0), (85, 40), (0, 0)]),
        732: ("D", [(0, 0), (0, 0), (42, 21)]),
        733: ("D", [(85, 40), (0, 0), (0, 0)]),
        734: ("D", [(0, 0), (0, 0), (42, 21)]),
        735: ("D", [(0, 0), (0, 0), (85, 40)]),
        736: ("D", [(0, 0), (42, 21), (0, 0)]),
        737: ("D", [(140, 70), (0, 0), (0, 0)]),
        738: ("D", [(126, 62), (0, 0), (0, 0)]),
        740: ("D", [(0, 0), (0, 0), (85, 40)]),
        741: ("D", [(0, 0), (0, 0), (42, 21)]),
        742: ("D", [(8, 4), (85, 40), (0, 0)]),
        744: ("D", [(42, 21), (0, 0), (0, 0)]),
    },
    distributed=[],
    caps={},
)

_L123 = """
1 2 175 10;1 3 250 11;1 7 300 1;3 4 200 11;3 5 325 11;5 6 250 11;7 8 200 1;8 12 225 10;
8 9 225 9;8 13 300 1;9 14 425 9;13 34 150 11;13 18 825 2;14 11 250 9;14 10 250 9;
15 16 375 11;15 17 350 11;18 19 250 9;18 21 300 2;19 20 325 9;21 22 525 10;21 23 250 2;
23 24 550 11;23 25 275 2;25 26 350 7;25 28 200 2;26 27 275 7;26 31 225 11;27 33 500 9;
28 29 300 2;29 30 350 2;30 250 200 2;31 32 300 11;34 15 100 11;35 36 650 8;35 40 250 1;
36 37 300 9;36 38 250 10;38 39 325 10;40 41 325 11;40 42 250 1;42 43 500 10;42 44 200 1;
44 45 200 9;44 47 250 1;45 46 300 9;47 48 150 4;47 49 250 4;49 50 250 4;50 51 250 4;
51 151 500 4;52 53 200 1;53 54 125 1;54 55 275 1;54 57 350 3;55 56 275 1;57 58 250 10;
57 60 750 3;58 59 250 10;60 61 550 5;60 62 250 12;62 63 175 12;63 64 350 12;64 65 425 12;
65 66 325 12;67 68 200 9;67 72 275 3;67 97 250 3;68 69 275 9;69 70 325 9;70 71 275 9;
72 73 275 11;72 76 200 3;73 74 350 11;74 75 400 11;76 77 400 6;76 86 700 3;77 78 100 6;
78 79 225 6;78 80 475 6;80 81 475 6;81 82 250 6;81 84 675 11;82 83 250 6;84 85 475 11;
86 87 450 6;87 88 175 9;87 89 275 6;89 90 225 10;89 91 225 6;91 92 300 11;91 93 225 6;
93 94 275 9;93 95 300 6;95 96 200 10;97 98 275 3;98 99 550 3;99 100 300 3;100 450 800 3;
101 102 225 11;101 105 275 3;102 103 325 11;103 104 700 11;105 106 225 10;105 108 325 3;
106 107 575 10;108 109 450 9;108 300 1000 3;109 110 300 9;110 111 575 9;110 112 125 9;
112 113 525 9;113 114 325 9;135 35 375 4;149 1 400 1;152 52 400 1;160 67 350 6;197 101 250 3;
13 152 0 SWITCH;18 135 0 SWITCH;60 160 0 SWITCH;97 197 0 SWITCH;150 149 0 SWITCH;61 610 0 XFM
"""


def _parse_segments(text):
    out = []
    for rec in text.replace("\n", "").split(";"):
        if not rec.strip():
            continue
        a, b, ft, cfg = rec.split()
        out.append((int(a), int(b), int(ft), cfg if not cfg.isdigit() else int(cfg)))
    return out


def _y(bus, a=(0, 0), b=(0, 0), c=(0, 0)):
    return bus, ("Y", [a, b, c])


_Y123 = dict([
    _y(1, a=(40, 20)), _y(2, b=(20, 10)), _y(4, c=(40, 20)), _y(5, c=(20, 10)), _y(6, c=(40, 20)),
    _y(7, a=(20, 10)), _y(9, a=(40, 20)), _y(10, a=(20, 10)), _y(11, a=(40, 20)), _y(12, b=(20, 10)),
    _y(16, c=(40, 20)), _y(17, c=(20, 10)), _y(19, a=(40, 20)), _y(20, a=(40, 20)), _y(22, b=(40, 20)),
    _y(24, c=(40, 20)), _y(28, a=(40, 20)), _y(29, a=(40, 20)), _y(30, c=(40, 20)), _y(31, c=(20, 10)),
    _y(32, c=(20, 10)), _y(33, a=(40, 20)), _y(34, c=(40, 20)), _y(37, a=(40, 20)), _y(38, b=(20, 10)),
    _y(39, b=(20, 10)), _y(41, c=(20, 10)), _y(42, a=(20, 10)), _y(43, b=(40, 20)), _y(45, a=(20, 10)),
    _y(46, a=(20, 10)), _y(47, (35, 25), (35, 25), (35, 25)), _y(48, (70, 50), (70, 50), (70, 50)),
    _y(49, (35, 25), (70, 50), (35, 20)), _y(50, c=(40, 20)), _y(51, a=(20, 10)), _y(52, a=(40, 20)),
    _y(53, a=(40, 20)), _y(55, a=(20, 10)), _y(56, b=(20, 10)), _y(58, b=(20, 10)), _y(59, b=(20, 10)),
    _y(60, a=(20, 10)), _y(62, c=(40, 20)), _y(63, a=(40, 20)), _y(64, b=(75, 35)), _y(66, c=(75, 35)),
    _y(68, a=(20, 10)), _y(69, a=(40, 20)), _y(70, a=(20, 10)), _y(71, a=(40, 20)), _y(73, c=(40, 20)),
    _y(74, c=(40, 20)), _y(75, c=(40, 20)), _y(77, b=(40, 20)), _y(79, a=(40, 20)), _y(80, b=(40, 20)),
    _y(82, a=(40, 20)), _y(83, c=(20, 10)), _y(84, c=(20, 10)), _y(85, c=(40, 20)), _y(86, b=(20, 10)),
    _y(87, b=(40, 20)), _y(88, a=(40, 20)), _y(90, b=(40, 20)), _y(92, c=(40, 20)), _y(94, a=(40, 20)),
    _y(95, b=(20, 10)), _y(96, b=(20, 10)), _y(98, a=(40, 20)), _y(99, b=(40, 20)), _y(100, c=(40, 20)),
    _y(102, c=(20, 10)), _y(103, c=(40, 20)), _y(104, c=(40, 20)), _y(106, b=(40, 20)),
    _y(107, b=(40, 20)), _y(109, a=(40, 20)), _y(111, a=(20, 10)), _y(112, a=(20, 10)),
    _y(113, a=(40, 20)), _y(114, a=(20, 10)),
])
_Y123[35] = ("D", [(40, 20), (0, 0), (0, 0)])
_Y123[65] = ("D", [(35, 25), (35, 25), (70, 50)])
_Y123[76] = ("D", [(105, 80), (70, 50), (70, 50)])

F123 = dict(
    name="ieee123", kv_ll=4.16, root=150, configs=C123, switch_config=1,
    segments=_parse_segments(_L123),
    transformers={(61, 610): transformer(150, 4.16, 1.27, 2.72)},
    loads=_Y123,
    distributed=[],
    caps={83: [200, 200, 200], 88: [50, 0, 0], 90: [0, 50, 0], 92: [0, 0, 50]},
)

FEEDERS = [F13, F34, F37, F123]


# -- assembly ---------------------------------------------------------------------

def _per_phase(conn, legs):
    """Per-phase (P, Q) in kW/kvar from wye phase or delta leg entries."""
    out = np.zeros(3, complex)
    for k, (p, q) in enumerate(legs):
        s = p + 1j * q
        if conn == "Y":
            out[k] += s
        else:  # legs ab, bc, ca
            out[k] += s / 2
            out[(k + 1) % 3] += s / 2
    return out


def build(f):
    vb = f["kv_ll"] * 1e3 / np.sqrt(3)
    zbase = vb * vb / BASE_POWER
    adj = {}
    segs = {}
    for a, b, ft, cfg in f["segments"]:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
        segs[frozenset((a, b))] = (ft, cfg, (a, b))
    # BFS from the root, children by ascending label
    order, parent, q = [f["root"]], {}, deque([f["root"]])
    while q:
        i = q.popleft()
        for j in sorted(adj[i]):
            if j != f["root"] and j not in parent:
                parent[j] = i
                order.append(j)
                q.append(j)
    if len(order) != len(adj):
        raise SystemExit(f"{f['name']}: segments do not form a connected tree")
    bid = {lab: k for k, lab in enumerate(order)}

    line_recs = {}
    for j in order[1:]:
        i = parent[j]
        ft, cfg, orig = segs[frozenset((i, j))]
        if cfg == "XFM":
            ph, Z, B = f["transformers"][orig if orig in f["transformers"] else orig[::-1]]
            miles = 1.0
        elif cfg == "SWITCH":
            ph, Z, B = f["configs"][f["switch_config"]]
            miles = 10.0 / FT_PER_MILE
            B = np.zeros((3, 3))
        else:
            ph, Z, B = f["configs"][cfg]
            miles = ft / FT_PER_MILE
        line_recs[j] = (i, ph, Z * miles, B * miles * 1e-6)

    phases = {f["root"]: "abc"}
    for j in order[1:]:
        phases[j] = line_recs[j][1]

    load = {lab: np.zeros(3, complex) for lab in order}  # VA consumed per phase
    for bus, (conn, legs) in f["loads"].items():
        load[bus] += _per_phase(conn, legs) * 1e3
    for a, b, conn, legs in f["distributed"]:
        s = _per_phase(conn, legs) * 1e3 / 2
        load[a] += s
        load[b] += s
    # line charging: half at each end, injection j/2 diag(gamma B) |V|^2
    for j, (i, ph, Z, B) in line_recs.items():
        g = [IDX[p] for p in ph]
        Bs = B[np.ix_(g, g)]
        inj = np.zeros(3, complex)
        inj[g] = 0.5j * np.diag(GAMMA[np.ix_(g, g)] @ Bs) * vb * vb
        load[i] -= inj
        load[j] -= inj

    buses = []
    for lab in order:
        ph = phases[lab]
        g = [IDX[p] for p in ph]
        rec = {"id": bid[lab], "name": str(lab), "phases": ph}
        if lab == f["root"]:
            rec["vmin"] = [1.0] * len(g)
            rec["vmax"] = [1.0] * len(g)
            rec["vref"] = [[round(float(x.real * vb), 6), round(float(x.imag * vb), 6)]
                           for x in np.array([1, ALPHA, ALPHA ** 2])[g]]
        else:
            rec["vmin"] = [0.9] * len(g)
            rec["vmax"] = [1.1] * len(g)
        L = load[lab][g]
        unused = [p for p in range(3) if p not in g and abs(load[lab][p]) > 0]
        if unused:
            raise SystemExit(f"{f['name']}: load on missing phase at bus {lab}")
        if np.any(np.abs(L) > 0):
            rec["load"] = [[round(float(x.real), 6), round(float(x.imag), 6)] for x in L]
        if lab in f["caps"]:
            rec["devices"] = [{"type": "capacitor",
                               "qmax": [float(f["caps"][lab][k] * 1e3) for k in g]}]
        buses.append(rec)
    buses.sort(key=lambda r: r["id"])

    lines = []
    for j in order[1:]:
        i, ph, Z, B = line_recs[j]
        g = [IDX[p] for p in ph]
        Zs = Z[np.ix_(g, g)]
        lines.append({"from": bid[i], "to": bid[j], "name": f"{i}-{j}", "phases": ph,
                      "z": [[[round(float(x.real), 9), round(float(x.imag), 9)] for x in row]
                            for row in Zs]})
    return {"name": f["name"], "units": "si", "base_power_va": BASE_POWER,
            "base_voltage_v": round(float(vb), 6), "buses": buses, "lines": lines}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for f in FEEDERS:
        doc = build(f)
        path = OUT / f"{f['name']}.json"
        path.write_text(json.dumps(doc, indent=1) + "\n")
        print(f"{path.name}: {len(doc['buses'])} buses, {len(doc['lines'])} lines")


if __name__ == "__main__":
    main()
