"""Reference arithmetic coder used to generate ac_golden.txt.

Independent re-implementation with Python integers: PMF quantization to a
2^20 total, follow-bit carry handling and the two-bit flush. Run from this
directory: python3 ac_reference.py > ac_golden.txt
"""

import random

TOTAL = 1 << 20


def quantize(probs):
    v = len(probs)
    s = 0.0
    for p in probs:
        s += p
    spare = float(TOTAL - v)
    freqs, fracs = [], []
    for i, p in enumerate(probs):
        raw = p / s * spare
        whole = float(int(raw))
        freqs.append(1 + int(whole))
        fracs.append((raw - whole, i))
    left = TOTAL - sum(freqs)
    fracs.sort(key=lambda t: (-t[0], t[1]))
    k = 0
    while left > 0:
        freqs[fracs[k % v][1]] += 1
        left -= 1
        k += 1
    return freqs


def encode(freqs, symbols, precision):
    cum = [0]
    for f in freqs:
        cum.append(cum[-1] + f)
    total = cum[-1]
    top = (1 << precision) - 1
    half = 1 << (precision - 1)
    quarter = 1 << (precision - 2)
    low, high, pending = 0, top, 0
    out = []

    def emit(bit):
        nonlocal pending
        out.append(bit)
        out.extend([1 - bit] * pending)
        pending = 0

    for s in symbols:
        rng = high - low + 1
        high = low + rng * cum[s + 1] // total - 1
        low = low + rng * cum[s] // total
        while True:
            if high < half:
                emit(0)
            elif low >= half:
                emit(1)
                low -= half
                high -= half
            elif low >= quarter and high < 3 * quarter:
                pending += 1
                low -= quarter
                high -= quarter
            else:
                break
            low = 2 * low
            high = 2 * high + 1
    pending += 1
    emit(1 if low >= quarter else 0)
    return out


def main():
    rng = random.Random(1234)
    print("# precision<TAB>probabilities<TAB>symbols<TAB>bits")
    for case in range(20):
        v = rng.choice([2, 3, 5, 16, 258])
        if case % 4 == 0:
            probs = [1.0 / v] * v
        else:
            w = [rng.random() ** 3 for _ in range(v)]
            if case % 4 == 3:
                w[rng.randrange(v)] = 0.0
            s = sum(w)
            probs = [x / s for x in w]
        precision = [31, 31, 31, 24, 48][case % 5]
        n = rng.randint(1, 64)
        freqs = quantize(probs)
        syms = rng.choices(range(v), weights=freqs, k=n)
        bits = encode(freqs, syms, precision)
        print(
            "%d\t%s\t%s\t%s"
            % (
                precision,
                ",".join(repr(p) for p in probs),
                ",".join(map(str, syms)),
                "".join(map(str, bits)),
            )
        )


if __name__ == "__main__":
    main()
