"""Suffix-stripping stemmers, implemented as pure algorithmic code.

English follows the classic Porter algorithm; German follows the
Snowball German algorithm (operating on text whose diacritics were
already transliterated away by the tokenizer, so the trailing
umlaut-restoration step is a no-op here).
"""

from __future__ import annotations

# ---------------------------------------------------------------- English

_VOWELS = "aeiou"


def _is_cons(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel->consonant transitions ([C](VC)^m[V])."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        cons = _is_cons(stem, i)
        if prev_vowel and cons:
            m += 1
        prev_vowel = not cons
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(word: str) -> bool:
    return (len(word) >= 2 and word[-1] == word[-2]
            and _is_cons(word, len(word) - 1))


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    return (_is_cons(word, len(word) - 3)
            and not _is_cons(word, len(word) - 2)
            and _is_cons(word, len(word) - 1)
            and word[-1] not in "wxy")


# (suffix, replacement) pairs; within a step the longest matching suffix
# is the only candidate tried, per the algorithm's longest-match rule.
_STEP2 = [("ational", "ate"), ("ization", "ize"), ("iveness", "ive"),
          ("fulness", "ful"), ("ousness", "ous"), ("tional", "tion"),
          ("biliti", "ble"), ("enci", "ence"), ("anci", "ance"),
          ("izer", "ize"), ("abli", "able"), ("alli", "al"),
          ("entli", "ent"), ("ousli", "ous"), ("ation", "ate"),
          ("ator", "ate"), ("alism", "al"), ("aliti", "al"),
          ("iviti", "ive"), ("eli", "e")]

_STEP3 = [("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
          ("ical", "ic"), ("ful", ""), ("ness", "")]

_STEP4 = ["ement", "ance", "ence", "able", "ible", "ment", "ant", "ent",
          "ion", "ism", "ate", "iti", "ous", "ive", "ize", "al", "er",
          "ic", "ou"]


def _longest_match(word: str, suffixes) -> str | None:
    best = None
    for s in suffixes:
        if word.endswith(s) and (best is None or len(s) > len(best)):
            best = s
    return best


def porter_stem(word: str) -> str:
    """Stem one lowercase English token."""
    w = word
    if len(w) <= 2:
        return w

    # Step 1a
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif not w.endswith("ss") and w.endswith("s"):
        w = w[:-1]

    # Step 1b
    flag_1b = False
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed") and _has_vowel(w[:-2]):
        w = w[:-2]
        flag_1b = True
    elif w.endswith("ing") and _has_vowel(w[:-3]):
        w = w[:-3]
        flag_1b = True
    if flag_1b:
        if w.endswith(("at", "bl", "iz")):
            w += "e"
        elif _ends_double_cons(w) and w[-1] not in "lsz":
            w = w[:-1]
        elif _measure(w) == 1 and _ends_cvc(w):
            w += "e"

    # Step 1c
    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"

    # Steps 2 and 3
    for table in (_STEP2, _STEP3):
        suffix = _longest_match(w, [s for s, _ in table])
        if suffix is not None:
            repl = dict(table)[suffix]
            if _measure(w[:-len(suffix)]) > 0:
                w = w[:-len(suffix)] + repl

    # Step 4
    suffix = _longest_match(w, _STEP4)
    if suffix is not None:
        stem = w[:-len(suffix)]
        if _measure(stem) > 1 and (suffix != "ion" or stem[-1:] in ("s", "t")):
            w = stem

    # Step 5a
    if w.endswith("e"):
        m = _measure(w[:-1])
        if m > 1 or (m == 1 and not _ends_cvc(w[:-1])):
            w = w[:-1]

    # Step 5b
    if _measure(w) > 1 and _ends_double_cons(w) and w.endswith("l"):
        w = w[:-1]

    return w


# ----------------------------------------------------------------- German

_DE_VOWELS = "aeiouyäöü"
_DE_S_ENDINGS = set("bdfghklmnrt")
_DE_ST_ENDINGS = set("bdfghklmnt")


def _de_prelude(word: str) -> str:
    w = word.replace("ß", "ss")
    # u and y between vowels act as consonants; mark them uppercase.
    chars = list(w)
    for i in range(1, len(chars) - 1):
        if chars[i] in "uy" and chars[i - 1] in _DE_VOWELS and chars[i + 1] in _DE_VOWELS:
            chars[i] = chars[i].upper()
    return "".join(chars)


def _de_regions(w: str) -> tuple[int, int]:
    """Start offsets of R1 and R2; R1 is pushed to at least position 3."""
    def after_vowel_nonvowel(start: int) -> int:
        for i in range(start, len(w) - 1):
            if w[i] in _DE_VOWELS and w[i + 1] not in _DE_VOWELS:
                return i + 2
        return len(w)

    r1 = after_vowel_nonvowel(0)
    r2 = after_vowel_nonvowel(r1)
    # standard adjustment: the region before R1 spans at least 3 letters
    return max(r1, 3), max(r2, 3)


def german_stem(word: str) -> str:
    """Stem one lowercase German token (diacritics may already be gone)."""
    w = _de_prelude(word)
    if len(w) <= 2:
        return w.lower()
    r1, r2 = _de_regions(w)

    def in_r1(pos: int) -> bool:
        return pos >= r1

    def in_r2(pos: int) -> bool:
        return pos >= r2

    # Step 1
    suffix = _longest_match(w, ["ern", "em", "er", "en", "es", "e", "s"])
    if suffix is not None:
        pos = len(w) - len(suffix)
        if suffix == "s":
            if in_r1(pos) and pos > 0 and w[pos - 1] in _DE_S_ENDINGS:
                w = w[:pos]
        elif in_r1(pos):
            w = w[:pos]
            if suffix in ("e", "en", "es") and w.endswith("niss"):
                w = w[:-1]

    # Step 2
    suffix = _longest_match(w, ["est", "en", "er", "st"])
    if suffix is not None:
        pos = len(w) - len(suffix)
        if suffix == "st":
            if in_r1(pos) and pos >= 4 and w[pos - 1] in _DE_ST_ENDINGS:
                w = w[:pos]
        elif in_r1(pos):
            w = w[:pos]

    # Step 3: derivational suffixes
    suffix = _longest_match(w, ["keit", "lich", "heit", "isch", "end",
                                "ung", "ig", "ik"])
    if suffix is not None:
        pos = len(w) - len(suffix)
        if suffix in ("end", "ung"):
            if in_r2(pos):
                w = w[:pos]
                if w.endswith("ig") and in_r2(len(w) - 2) and not w.endswith("eig"):
                    w = w[:-2]
        elif suffix in ("ig", "ik", "isch"):
            if in_r2(pos) and not (pos > 0 and w[pos - 1] == "e"):
                w = w[:pos]
        elif suffix in ("lich", "heit"):
            if in_r2(pos):
                w = w[:pos]
                for pre in ("er", "en"):
                    if w.endswith(pre) and in_r1(len(w) - 2):
                        w = w[:-2]
                        break
        elif suffix == "keit":
            if in_r2(pos):
                w = w[:pos]
                if w.endswith("lich") and in_r2(len(w) - 4):
                    w = w[:-4]
                elif w.endswith("ig") and in_r2(len(w) - 2):
                    w = w[:-2]

    w = w.lower()
    for uml, plain in (("ä", "a"), ("ö", "o"), ("ü", "u")):
        w = w.replace(uml, plain)
    return w
