"""Controlled-vocabulary parser for keyframe and transition texts.

Keyframe sentences describe static posture ("The left elbow is bent at a
right angle."); transition sentences describe movement between keyframes
("The person is moving way over forward at an average pace."). Both sides
of the grammar are closed: every token comes from the tables in
``data/grammar.json``, and the renderers emit canonical sentences that
parse back to the same AST.

Phase handling in transitions: each sentence starts a new phase unless it
carries a same-phase cue ("at the same time"); explicit sequencing cues
("a moment later", "then", "from that pose") also advance the phase.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

__all__ = [
    "PoseCode",
    "PoseStatement",
    "PoseScriptAST",
    "MotionPrimitive",
    "MotionScriptAST",
    "ParseError",
    "parse_pose_script",
    "parse_motion_script",
    "render_pose_script",
    "render_motion_script",
    "grammar_tables",
    "vocabulary",
    "scale_to_value",
]

POSE_CATEGORIES = (
    "angle",
    "distance",
    "relpos_x",
    "relpos_y",
    "relpos_z",
    "pitch_roll",
    "ground_contact",
    "orientation",
    "position",
)

MOTION_KINDS = ("move_direction", "turn", "posecode_change", "hold")

SPEED_TOKENS = ("very fast", "fast", "average pace", "slow", "unspecified")
MAGNITUDE_TOKENS = ("greatly", "way over", "slightly", "unspecified")

# Likert-style scale for orientation/position codes, mapped onto [-1, 1].
SCALE_VALUES = {
    "significant negative": -1.0,
    "slight negative": -0.5,
    "neutral": 0.0,
    "slight positive": 0.5,
    "significant positive": 1.0,
}


class ParseError(ValueError):
    """Raised when a fragment cannot be parsed; carries the character span."""

    def __init__(self, message: str, start: int = 0, end: int = 0):
        super().__init__(message)
        self.message = message
        self.start = start
        self.end = end

    def __str__(self) -> str:
        return f"[{self.start}..{self.end}] {self.message}"


@dataclass(frozen=True)
class PoseCode:
    category: str
    value: str
    axis: str | None = None

    def __post_init__(self):
        if self.category not in POSE_CATEGORIES:
            raise ValueError(f"unknown posecode category {self.category!r}")


@dataclass(frozen=True)
class PoseStatement:
    subject: str | tuple[str, str]
    predicate: PoseCode

    @property
    def is_pair(self) -> bool:
        return isinstance(self.subject, tuple)


@dataclass
class PoseScriptAST:
    statements: list[PoseStatement]

    def __post_init__(self):
        if not self.statements:
            raise ValueError("pose script must contain at least one statement")


@dataclass(frozen=True)
class MotionPrimitive:
    subject: str
    kind: str
    direction: str | None = None
    target: PoseCode | None = None
    speed: str = "unspecified"
    magnitude: str = "unspecified"
    phase: int = 0

    def __post_init__(self):
        if self.kind not in MOTION_KINDS:
            raise ValueError(f"unknown motion kind {self.kind!r}")
        if self.kind in ("move_direction", "turn") and self.direction is None:
            raise ValueError(f"{self.kind} primitive requires a direction")
        if self.kind == "posecode_change" and self.target is None:
            raise ValueError("posecode_change primitive requires a target")


@dataclass
class MotionScriptAST:
    phases: list[list[MotionPrimitive]]

    def __post_init__(self):
        if not self.phases or any(not p for p in self.phases):
            raise ValueError("motion script phases must be non-empty")
        for i, phase in enumerate(self.phases):
            for prim in phase:
                if prim.phase != i:
                    raise ValueError("primitive phase index mismatch")

    def primitives(self) -> list[MotionPrimitive]:
        return [p for phase in self.phases for p in phase]


# ---------------------------------------------------------------------------
# grammar tables

_TABLES: dict | None = None


def grammar_tables() -> dict:
    global _TABLES
    if _TABLES is None:
        raw = resources.files("behaviorplan.data").joinpath("grammar.json").read_text()
        _TABLES = json.loads(raw)
    return _TABLES


def vocabulary() -> dict:
    return grammar_tables()["vocabulary"]


def scale_to_value(token: str) -> float:
    return SCALE_VALUES[token]


_CATEGORY_ROLE = {
    "angle": "angle",
    "distance": "distance",
    "relpos": "relpos",
    "pitch_roll": "pitch_roll",
    "ground_contact": "ground",
    "orientation": "orientation",
    "position": "position",
}


def _norm_category(entry: dict) -> str:
    cat = entry["category"]
    if cat == "relpos":
        return "relpos_" + entry["axis"]
    return cat


def _longest_key_match(text: str, keys, start: int = 0) -> str | None:
    """Longest table key that prefixes text[start:] on a word boundary."""
    best = None
    rest = text[start:]
    for key in keys:
        if rest.startswith(key):
            end = start + len(key)
            if end == len(text) or not text[end].isalnum():
                if best is None or len(key) > len(best):
                    best = key
    return best


def _skip_separators(text: str, i: int) -> int:
    while i < len(text):
        if text[i] in " ,":
            i += 1
        elif text[i : i + 4] == "and ":
            i += 4
        else:
            break
    return i


@dataclass
class _Fragment:
    text: str
    start: int
    end: int
    cue: str | None = None  # None, "same", or "next"


_SENTENCE_SPLIT = re.compile(r"[.;]")


def _split_sentences(text: str) -> list[_Fragment]:
    frags = []
    pos = 0
    for m in _SENTENCE_SPLIT.finditer(text):
        piece = text[pos : m.start()]
        if piece.strip():
            lead = len(piece) - len(piece.lstrip())
            trail = len(piece) - len(piece.rstrip())
            frags.append(_Fragment(piece.strip(), pos + lead, m.start() - trail))
        pos = m.end()
    piece = text[pos:]
    if piece.strip():
        lead = len(piece) - len(piece.lstrip())
        frags.append(_Fragment(piece.strip(), pos + lead, pos + lead + len(piece.strip())))
    return frags


def _normalize_subject_text(text: str) -> str:
    for pronoun in ("his ", "her ", "their "):
        if text.startswith(pronoun):
            return "the " + text[len(pronoun) :]
    return text


class _PoseParser:
    def __init__(self):
        t = grammar_tables()
        self.subjects = t["subjects"]
        self.plural = t["subjects_plural"]
        self.lateral = t["lateral_subjects"]
        self.predicates = t["predicates"]
        self.hinged = set(t["hinged_joints"])
        self.subject_keys = (
            list(self.subjects) + list(self.plural) + list(self.lateral)
        )

    # subject resolution -----------------------------------------------
    def _match_subject(self, text: str):
        """Match a subject phrase at the start of text; returns (key, consumed)."""
        low = _normalize_subject_text(text.lower())
        shift = len(text) - len(low)  # pronoun normalization may change length
        key = _longest_key_match(low, self.subject_keys)
        if key is None and not low.startswith("the "):
            key = _longest_key_match("the " + low, self.subject_keys)
            if key is not None:
                return key, len(key) - 4 + shift
            return None, 0
        if key is None:
            return None, 0
        return key, len(key) + shift

    def _resolve_lateral(self, key: str, laterality: str | None, start: int, end: int) -> str:
        options = self.lateral[key]
        if laterality is None or laterality not in options:
            raise ParseError(
                f"subject {key!r} needs a left/right context", start, end
            )
        return options[laterality]

    def _subject_joint(self, key: str, role: str, start: int, end: int) -> str:
        entry = self.subjects[key]
        joint = entry.get(role)
        if joint is None:
            raise ParseError(
                f"subject {key!r} does not support a {role} predicate", start, end
            )
        return joint

    # predicate scanning ------------------------------------------------
    def _scan_predicates(self, text: str, base: int, laterality: str | None):
        """Yield (entry, object_joint_or_None, span) over a predicate string."""
        out = []
        i = 0
        n = len(text)
        while i < n:
            i = _skip_separators(text, i)
            if i >= n:
                break
            if text[i : i + 5] == "with ":
                i += 5
                continue
            key = _longest_key_match(text, self.predicates, i)
            if key is None:
                raise ParseError(
                    f"unknown predicate starting at {text[i:][:40]!r}",
                    base + i,
                    base + n,
                )
            entry = self.predicates[key]
            j = i + len(key)
            obj = None
            if entry.get("takes_object"):
                j = _skip_separators(text, j)
                for filler in ("relative to ", "of "):
                    if text[j:].startswith(filler):
                        j += len(filler)
                        break
                sub_key, consumed = self._match_subject(text[j:])
                if sub_key is None:
                    raise ParseError(
                        f"missing object for predicate {key!r}", base + i, base + n
                    )
                if sub_key in self.lateral:
                    sub_key = self._resolve_lateral(
                        sub_key, laterality, base + j, base + j + consumed
                    )
                if sub_key in self.plural:
                    raise ParseError(
                        "object of a relative predicate must be a single joint",
                        base + j,
                        base + j + consumed,
                    )
                role = "relpos" if entry["category"] == "relpos" else "distance"
                obj = self._subject_joint(sub_key, role, base + j, base + j + consumed)
                j += consumed
            out.append((entry, obj, (base + i, base + j)))
            i = j
        if not out:
            raise ParseError("empty predicate", base, base + n)
        return out

    # clause and sentence parsing ---------------------------------------
    def _parse_clause(
        self,
        clause: str,
        base: int,
        inherited_subject: str | None,
        laterality: str | None,
    ) -> tuple[list[PoseStatement], str | None, str | None]:
        low = clause.lower()
        key, consumed = self._match_subject(low)
        subject_key = None
        pair_key = None
        rest_at = 0
        if key is not None:
            if key in self.lateral:
                key = self._resolve_lateral(key, laterality, base, base + consumed)
            subject_key = key
            rest_at = consumed
            rest = low[rest_at:].lstrip()
            rest_at += len(low[rest_at:]) - len(rest)
            if rest.startswith("and "):
                # explicit pair subject: "<A> and <B> are ..."
                second, consumed2 = self._match_subject(rest[4:])
                if second is not None:
                    if second in self.lateral:
                        second = self._resolve_lateral(
                            second, laterality, base + rest_at, base + rest_at + consumed2
                        )
                    pair_key = second
                    rest_at += 4 + consumed2
                    rest = low[rest_at:].lstrip()
                    rest_at += len(low[rest_at:]) - len(rest)
            for copula in ("is ", "are "):
                if rest.startswith(copula):
                    rest_at += len(copula)
                    break
        if subject_key is None:
            # bare predicate clause; subject is inherited from the sentence
            subject_key = inherited_subject or "the person"
            rest_at = 0
        rest = low[rest_at:]
        matched = self._scan_predicates(rest, base + rest_at, laterality)
        statements = []
        for entry, obj, span in matched:
            if pair_key is not None:
                statements.extend(
                    self._build_pair_statements(subject_key, pair_key, entry, obj, span)
                )
            else:
                statements.extend(self._build_statements(subject_key, entry, obj, span))
        new_lat = None
        if "left" in subject_key:
            new_lat = "left"
        elif "right" in subject_key:
            new_lat = "right"
        return statements, subject_key, new_lat

    def _build_pair_statements(self, key_a, key_b, entry, obj, span):
        start, end = span
        if obj is not None or key_a in self.plural or key_b in self.plural:
            raise ParseError(
                "a paired subject cannot take an object or plural parts", start, end
            )
        category = _norm_category(entry)
        code = PoseCode(category, entry["value"], entry.get("axis"))
        role = entry.get("subject_role") or _CATEGORY_ROLE[entry["category"]]
        if entry["category"] in ("distance", "relpos"):
            a = self._subject_joint(key_a, role, start, end)
            b = self._subject_joint(key_b, role, start, end)
            return [PoseStatement((a, b), code)]
        out = []
        for key in (key_a, key_b):
            out.extend(self._build_statements(key, entry, None, span))
        return out

    def _build_statements(self, subject_key, entry, obj, span):
        category = _norm_category(entry)
        code = PoseCode(category, entry["value"], entry.get("axis"))
        role = entry.get("subject_role") or _CATEGORY_ROLE[entry["category"]]
        start, end = span
        if subject_key in self.plural:
            table = self.plural[subject_key]
            if obj is not None:
                members = table.get(role) or table.get("pair")
                if not members:
                    raise ParseError(
                        f"subject {subject_key!r} does not support {role}", start, end
                    )
                return [PoseStatement((m, obj), code) for m in members]
            if entry["category"] in ("distance", "relpos"):
                pair = table.get("pair")
                if not pair:
                    raise ParseError(
                        f"subject {subject_key!r} has no joint pair", start, end
                    )
                return [PoseStatement((pair[0], pair[1]), code)]
            members = table.get(role)
            if not members:
                raise ParseError(
                    f"subject {subject_key!r} does not support a {role} predicate",
                    start,
                    end,
                )
            return [PoseStatement(m, code) for m in members]
        joint = self._subject_joint(subject_key, role, start, end)
        if obj is not None:
            return [PoseStatement((joint, obj), code)]
        if entry["category"] in ("distance", "relpos"):
            raise ParseError(
                f"{entry['value']!r} needs a joint pair or an object", start, end
            )
        if entry["category"] == "angle" and joint not in self.hinged:
            raise ParseError(f"joint {joint!r} is not hinged", start, end)
        return [PoseStatement(joint, code)]

    def parse(self, text: str) -> PoseScriptAST:
        statements: list[PoseStatement] = []
        angle_seen: dict[str, PoseCode] = {}
        for frag in _split_sentences(text):
            clauses = re.split(r",\s+(?=with\s)", frag.text)
            base = frag.start
            inherited = None
            laterality = None
            for clause in clauses:
                clause_l = clause.strip()
                if clause_l.lower().startswith("with "):
                    clause_l = clause_l[5:]
                    base_off = frag.text.find(clause) + 5
                else:
                    base_off = frag.text.find(clause)
                stmts, inherited_new, lat = self._parse_clause(
                    clause_l, base + max(base_off, 0), inherited, laterality
                )
                if inherited is None:
                    inherited = inherited_new
                if laterality is None:
                    laterality = lat
                for st in stmts:
                    if st.predicate.category == "angle" and not st.is_pair:
                        prev = angle_seen.get(st.subject)
                        if prev is not None and prev != st.predicate:
                            raise ParseError(
                                f"conflicting angle predicates for {st.subject}",
                                frag.start,
                                frag.end,
                            )
                        angle_seen[st.subject] = st.predicate
                    statements.append(st)
        if not statements:
            raise ParseError("no parseable sentences", 0, len(text))
        return PoseScriptAST(statements)


class _MotionParser:
    def __init__(self):
        t = grammar_tables()
        m = t["motion"]
        self.pose = _PoseParser()
        self.move_verbs = sorted(m["move_verbs"], key=len, reverse=True)
        self.turn_verbs = sorted(m["turn_verbs"], key=len, reverse=True)
        self.change_verbs = m["change_verbs"]
        self.hold_phrases = m["hold_phrases"]
        self.move_directions = m["move_directions"]
        self.turn_directions = m["turn_directions"]
        self.magnitudes = m["magnitudes"]
        self.speeds = m["speeds"]
        self.cues_same = m["cues_same_phase"]
        self.cues_next = m["cues_next_phase"]
        self.angle_values = {
            k: v for k, v in t["predicates"].items() if v["category"] == "angle"
        }

    # fragment segmentation ---------------------------------------------
    def _split_fragments(self, text: str) -> list[_Fragment]:
        all_cues = sorted(self.cues_same + self.cues_next, key=len, reverse=True)
        cue_re = re.compile(
            r"(?:^|,\s*)(" + "|".join(re.escape(c) for c in all_cues) + r")\s*,?\s*",
            re.IGNORECASE,
        )
        frags: list[_Fragment] = []
        for sent in _split_sentences(text):
            pos = 0
            pending: str | None = None
            low = sent.text.lower()
            for m in cue_re.finditer(low):
                before = sent.text[pos : m.start()].strip()
                if before:
                    frags.append(
                        _Fragment(before, sent.start + pos, sent.start + m.start(), pending)
                    )
                    pending = None
                cue = m.group(1).lower()
                pending = "same" if cue in self.cues_same else "next"
                pos = m.end()
            rest = sent.text[pos:].strip()
            if rest:
                frags.append(
                    _Fragment(rest, sent.start + pos, sent.end, pending)
                )
        return frags

    # token scanning ------------------------------------------------------
    def _scan_adverbs(self, text: str, base: int, directions: dict | None):
        """Scan magnitude/speed (and optionally direction) tokens greedily."""
        magnitude = "unspecified"
        speed = "unspecified"
        direction = None
        i = 0
        n = len(text)
        while i < n:
            i = _skip_separators(text, i)
            if i >= n:
                break
            key = _longest_key_match(text, self.magnitudes, i)
            if key is not None and magnitude == "unspecified":
                magnitude = self.magnitudes[key]
                i += len(key)
                continue
            key = _longest_key_match(text, self.speeds, i)
            if key is not None:
                speed = self.speeds[key]
                i += len(key)
                continue
            if directions is not None:
                key = _longest_key_match(text, directions, i)
                if key is not None and direction is None:
                    direction = directions[key]
                    if key == "around" and magnitude == "unspecified":
                        magnitude = "greatly"
                    i += len(key)
                    continue
            raise ParseError(
                f"unknown motion token starting at {text[i:][:30]!r}",
                base + i,
                base + n,
            )
        return magnitude, speed, direction

    def _parse_fragment(self, frag: _Fragment, laterality: str | None):
        low = frag.text.lower()
        key, consumed = self.pose._match_subject(low)
        if key is None:
            raise ParseError(f"unknown subject in {frag.text!r}", frag.start, frag.end)
        if key in self.pose.lateral:
            key = self.pose._resolve_lateral(key, laterality, frag.start, frag.end)
        rest = low[consumed:].strip()
        base = frag.start + consumed + (len(low[consumed:]) - len(rest))

        for phrase in self.hold_phrases:
            if rest == phrase or rest == "is " + phrase.replace("holds", "holding"):
                return [("hold", key, None, None, "unspecified", "unspecified")]

        verb = _longest_key_match(rest, self.move_verbs)
        if verb is not None:
            tail = rest[len(verb) :].strip()
            mag, speed, direction = self._scan_adverbs(
                tail, base + len(verb), self.move_directions
            )
            if direction is None:
                raise ParseError("move needs a direction", frag.start, frag.end)
            return [("move_direction", key, direction, None, speed, mag)]

        verb = _longest_key_match(rest, self.turn_verbs)
        if verb is not None:
            tail = rest[len(verb) :].strip()
            mag, speed, direction = self._scan_adverbs(
                tail, base + len(verb), self.turn_directions
            )
            if direction is None:
                raise ParseError("turn needs a direction", frag.start, frag.end)
            return [("turn", key, direction, None, speed, mag)]

        copula = ""
        for c in ("is ", "are "):
            if rest.startswith(c):
                copula = c
                rest = rest[len(c) :]
                break

        change = _longest_key_match(rest, self.change_verbs)
        if change is not None:
            tail = rest[len(change) :].strip()
            target_value = self.change_verbs[change]
            if tail.startswith("to "):
                tail = tail[3:]
                tkey = _longest_key_match(tail, self.angle_values)
                if tkey is None:
                    raise ParseError(
                        f"unknown change target {tail[:30]!r}", frag.start, frag.end
                    )
                target_value = self.angle_values[tkey]["value"]
                tail = tail[len(tkey) :].strip()
            mag, speed, _ = self._scan_adverbs(tail, base, None)
            target = PoseCode("angle", target_value)
            return [("posecode_change", key, None, target, speed, mag)]

        tkey = _longest_key_match(rest, self.angle_values)
        if tkey is not None:
            tail = rest[len(tkey) :].strip()
            mag, speed, _ = self._scan_adverbs(tail, base, None)
            target = PoseCode("angle", self.angle_values[tkey]["value"])
            return [("posecode_change", key, None, target, speed, mag)]

        raise ParseError(f"cannot parse transition {frag.text!r}", frag.start, frag.end)

    def parse(self, text: str) -> MotionScriptAST:
        frags = self._split_fragments(text)
        if not frags:
            raise ParseError("no parseable sentences", 0, len(text))
        phases: list[list[MotionPrimitive]] = []
        laterality = None
        for idx, frag in enumerate(frags):
            if idx == 0 or frag.cue != "same":
                phases.append([])
            phase_idx = len(phases) - 1
            for kind, subj_key, direction, target, speed, mag in self._parse_fragment(
                frag, laterality
            ):
                for subject in self._resolve_motion_subjects(subj_key, kind, frag):
                    phases[phase_idx].append(
                        MotionPrimitive(
                            subject=subject,
                            kind=kind,
                            direction=direction,
                            target=target,
                            speed=speed,
                            magnitude=mag,
                            phase=phase_idx,
                        )
                    )
            if "left" in subj_key:
                laterality = "left"
            elif "right" in subj_key:
                laterality = "right"
        return MotionScriptAST(phases)

    def _resolve_motion_subjects(self, key: str, kind: str, frag: _Fragment) -> list[str]:
        if key in self.pose.plural:
            if kind != "posecode_change":
                raise ParseError(
                    f"plural subject {key!r} only supports posecode changes",
                    frag.start,
                    frag.end,
                )
            members = self.pose.plural[key].get("angle")
            if not members:
                raise ParseError(
                    f"subject {key!r} cannot change a posecode", frag.start, frag.end
                )
            return list(members)
        entry = self.pose.subjects[key]
        if kind in ("move_direction", "turn", "hold"):
            return [entry.get("move", "root")]
        joint = entry.get("angle") or entry.get("relpos")
        if joint is None:
            raise ParseError(
                f"subject {key!r} cannot change a posecode", frag.start, frag.end
            )
        return [joint]


_POSE_PARSER: _PoseParser | None = None
_MOTION_PARSER: _MotionParser | None = None


def parse_pose_script(text: str) -> PoseScriptAST:
    global _POSE_PARSER
    if _POSE_PARSER is None:
        _POSE_PARSER = _PoseParser()
    return _POSE_PARSER.parse(text)


def parse_motion_script(text: str) -> MotionScriptAST:
    global _MOTION_PARSER
    if _MOTION_PARSER is None:
        _MOTION_PARSER = _MotionParser()
    return _MOTION_PARSER.parse(text)


# ---------------------------------------------------------------------------
# rendering

def _joint_phrase(joint: str) -> str:
    phrases = grammar_tables()["canonical"]["joint_phrases"]
    if joint not in phrases:
        raise ValueError(f"no canonical phrase for joint {joint!r}")
    return phrases[joint]


def _surface_for(category: str, value: str, axis: str | None) -> str:
    preds = grammar_tables()["predicates"]
    for key, entry in preds.items():
        if (
            _norm_category(entry) == category
            and entry["value"] == value
            and entry.get("axis") == axis
            and not entry.get("subject_role")
        ):
            return key
    raise ValueError(f"no surface form for {category}:{value}")


def _capitalize(sentence: str) -> str:
    return sentence[0].upper() + sentence[1:]


def render_pose_statement(st: PoseStatement) -> str:
    code = st.predicate
    if code.category.startswith("relpos"):
        a, b = st.subject
        token = code.value
        if token.endswith("-ignored"):
            body = f"{_joint_phrase(a)} is {token} relative to {_joint_phrase(b)}."
        else:
            body = f"{_joint_phrase(a)} is {token} {_joint_phrase(b)}."
        return _capitalize(body)
    if code.category == "distance":
        a, b = st.subject
        return _capitalize(f"{_joint_phrase(a)} and {_joint_phrase(b)} are {code.value}.")
    if code.category in ("orientation", "position"):
        surface = _surface_for(code.category, code.value, code.axis)
        return _capitalize(f"{_joint_phrase('root')} is {surface}.")
    if code.category == "pitch_roll":
        # spine2 is addressed as "the torso"; keep statement/classify symmetry
        return _capitalize(f"{_joint_phrase(st.subject)} is {code.value}.")
    return _capitalize(f"{_joint_phrase(st.subject)} is {code.value}.")


def render_pose_script(ast: PoseScriptAST) -> str:
    return " ".join(render_pose_statement(st) for st in ast.statements)


def render_motion_primitive(prim: MotionPrimitive) -> str:
    canon = grammar_tables()["canonical"]
    subj = _joint_phrase(prim.subject)
    if prim.kind == "hold":
        return f"{subj} holds the pose."
    if prim.kind in ("move_direction", "turn"):
        verb = "is moving" if prim.kind == "move_direction" else "is turning"
        table = (
            canon["move_direction_surfaces"]
            if prim.kind == "move_direction"
            else canon["turn_direction_surfaces"]
        )
        parts = [subj, verb]
        if prim.magnitude != "unspecified":
            parts.append(canon["magnitude_surfaces"][prim.magnitude])
        parts.append(table[prim.direction])
        if prim.speed != "unspecified":
            parts.append(canon["speed_pace_surfaces"][prim.speed])
        return " ".join(parts) + "."
    # posecode_change
    if prim.target.value == "straight":
        verb = "extending"
    elif prim.target.value == "completely bent":
        verb = "bending"
    else:
        verb = f"bending to {prim.target.value}"
    parts = [subj, "is", verb]
    if prim.magnitude != "unspecified":
        parts.append(canon["magnitude_surfaces"][prim.magnitude])
    if prim.speed != "unspecified":
        adv = canon["speed_adverb_surfaces"][prim.speed]
        if prim.magnitude != "unspecified":
            parts.append("and")
        parts.append(adv)
    return " ".join(parts) + "."


def render_motion_script(ast: MotionScriptAST) -> str:
    sentences = []
    for phase_idx, phase in enumerate(ast.phases):
        for j, prim in enumerate(phase):
            body = render_motion_primitive(prim)
            if phase_idx > 0 and j == 0:
                sentences.append("A moment later, " + body[0].lower() + body[1:])
            elif j > 0:
                sentences.append("At the same time, " + body[0].lower() + body[1:])
            else:
                sentences.append(_capitalize(body))
    return " ".join(sentences)
