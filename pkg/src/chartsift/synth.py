"""Synthetic patient corpora with a planted-evidence oracle.

Each synthetic patient gets a handful of history reports filled with
distractor sentences, one anchor radiology report, and a set of chosen
diagnosis categories.  A chosen category always emits its code twice after
the anchor (making it persistent); with probability ``rho`` an evidence
sentence for it is also planted into a history report and recorded in the
oracle under the anchor day.  Evidence templates come in two flavors:
lexically overlapping (sharing content words with the category
description) and paraphrased (sharing none), so lexical baselines can be
stress-tested on the paraphrased subset.

Generation is single-threaded and fully determined by the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .corpus import REPORT_KINDS, CodeEvent, Corpus, Report
from .hierarchy import DiagnosisHierarchy, build_hierarchy
from .lexical import fingerprint, word_tokens


@dataclass
class SynthCategory:
    id: str
    name: str
    description: str
    code: str
    parent: str
    system: str = "ICD9"
    overlapping: list[str] = field(default_factory=list)
    paraphrased: list[str] = field(default_factory=list)


@dataclass
class SynthGroup:
    id: str
    name: str
    description: str
    parent: Optional[str] = None


@dataclass
class SynthConfig:
    n_patients: int = 50
    reports_per_patient: int = 4
    sentences_per_report: int = 5
    categories_per_patient: tuple[int, int] = (1, 3)
    rho: float = 0.9
    paraphrase_prob: float = 0.4
    anchor_day: int = 350
    history_span: int = 340
    code_offsets: tuple[int, int] = (30, 90)
    history_kinds: tuple[str, ...] = REPORT_KINDS
    groups: list[SynthGroup] = field(default_factory=list)
    categories: list[SynthCategory] = field(default_factory=list)
    distractors: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho}")
        if not self.categories:
            raise ValueError("config needs at least one category")
        if not self.distractors:
            raise ValueError("distractor pool is empty")
        for cat in self.categories:
            if not cat.overlapping:
                raise ValueError(f"category {cat.id}: empty overlapping template pool")
            if self.paraphrase_prob > 0 and not cat.paraphrased:
                raise ValueError(f"category {cat.id}: empty paraphrased template pool")
        lo, hi = self.categories_per_patient
        if not 1 <= lo <= hi <= len(self.categories):
            raise ValueError("categories_per_patient out of range")
        if self.reports_per_patient > self.history_span:
            raise ValueError("not enough distinct history days for the report count")

    def to_json(self) -> dict:
        return {
            "n_patients": self.n_patients,
            "reports_per_patient": self.reports_per_patient,
            "sentences_per_report": self.sentences_per_report,
            "categories_per_patient": list(self.categories_per_patient),
            "rho": self.rho,
            "paraphrase_prob": self.paraphrase_prob,
            "anchor_day": self.anchor_day,
            "history_span": self.history_span,
            "code_offsets": list(self.code_offsets),
            "history_kinds": list(self.history_kinds),
            "groups": [vars(g) for g in self.groups],
            "categories": [vars(c) for c in self.categories],
            "distractors": list(self.distractors),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SynthConfig":
        cfg = cls(
            n_patients=data.get("n_patients", 50),
            reports_per_patient=data.get("reports_per_patient", 4),
            sentences_per_report=data.get("sentences_per_report", 5),
            categories_per_patient=tuple(data.get("categories_per_patient", (1, 3))),
            rho=data.get("rho", 0.9),
            paraphrase_prob=data.get("paraphrase_prob", 0.4),
            anchor_day=data.get("anchor_day", 350),
            history_span=data.get("history_span", 340),
            code_offsets=tuple(data.get("code_offsets", (30, 90))),
            history_kinds=tuple(data.get("history_kinds", REPORT_KINDS)),
            groups=[SynthGroup(**g) for g in data.get("groups", [])],
            categories=[SynthCategory(**c) for c in data.get("categories", [])],
            distractors=list(data.get("distractors", [])),
        )
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "SynthConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")


@dataclass
class EvidenceOracle:
    """Ground-truth relevant sentences keyed by (patient, time point, category)."""

    entries: dict[tuple[str, int, str], dict[str, bool]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, patient_id: str, time_point: int, category_id: str,
            sentence: str, paraphrased: bool) -> None:
        key = (patient_id, time_point, category_id)
        self.entries.setdefault(key, {})[fingerprint(sentence)] = paraphrased

    def fingerprints(self, patient_id: str, time_point: int,
                     category_id: str) -> set[str]:
        return set(self.entries.get((patient_id, time_point, category_id), {}))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for (pid, t, cat), sentences in sorted(self.entries.items()):
                for fp, para in sorted(sentences.items()):
                    fh.write(json.dumps({
                        "patient_id": pid, "time_point": t, "category_id": cat,
                        "sentence": fp, "paraphrased": para,
                    }) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EvidenceOracle":
        oracle = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                oracle.add(rec["patient_id"], int(rec["time_point"]),
                           rec["category_id"], rec["sentence"],
                           bool(rec.get("paraphrased", False)))
        return oracle


def hierarchy_records(config: SynthConfig) -> list[dict]:
    records = []
    for g in config.groups:
        records.append({"id": g.id, "name": g.name, "description": g.description,
                        "parent": g.parent})
    for c in config.categories:
        records.append({"id": c.id, "name": c.name, "description": c.description,
                        "parent": c.parent, "codes": [c.code]})
    return records


def build_synth_hierarchy(config: SynthConfig) -> DiagnosisHierarchy:
    return build_hierarchy(hierarchy_records(config))


def generate_synthetic(config: SynthConfig, seed: int) -> tuple[Corpus, EvidenceOracle]:
    """Generate a corpus and its planted-evidence oracle. Deterministic in seed."""
    config.validate()
    rng = np.random.default_rng(seed)
    corpus = Corpus()
    oracle = EvidenceOracle()
    cat_lo, cat_hi = config.categories_per_patient

    for p in range(config.n_patients):
        pid = f"p{p:05d}"
        n_hist = config.reports_per_patient
        days = np.sort(rng.choice(np.arange(1, config.history_span), size=n_hist,
                                  replace=False))
        kinds = [config.history_kinds[int(k)]
                 for k in rng.integers(0, len(config.history_kinds), size=n_hist)]
        report_sentences: list[list[str]] = []
        for _ in range(n_hist):
            picks = rng.integers(0, len(config.distractors),
                                 size=config.sentences_per_report)
            report_sentences.append([config.distractors[int(i)] for i in picks])

        n_chosen = int(rng.integers(cat_lo, cat_hi + 1))
        chosen = rng.choice(len(config.categories), size=n_chosen, replace=False)
        for idx in chosen:
            cat = config.categories[int(idx)]
            for offset in config.code_offsets:
                corpus.add_code_event(CodeEvent(
                    patient_id=pid, code=cat.code, system=cat.system,
                    timestamp=config.anchor_day + int(offset)))
            if rng.random() < config.rho:
                paraphrased = bool(rng.random() < config.paraphrase_prob)
                pool = cat.paraphrased if paraphrased else cat.overlapping
                sentence = pool[int(rng.integers(0, len(pool)))]
                target = int(rng.integers(0, n_hist))
                position = int(rng.integers(0, len(report_sentences[target]) + 1))
                report_sentences[target].insert(position, sentence)
                oracle.add(pid, config.anchor_day, cat.id, sentence, paraphrased)

        for j in range(n_hist):
            corpus.add_report(Report(
                id=f"{pid}-r{j}", patient_id=pid, kind=kinds[j],
                timestamp=int(days[j]), text=" ".join(report_sentences[j])))
        anchor_picks = rng.integers(0, len(config.distractors),
                                    size=config.sentences_per_report)
        anchor_text = " ".join(config.distractors[int(i)] for i in anchor_picks)
        corpus.add_report(Report(
            id=f"{pid}-anchor", patient_id=pid, kind="radiology",
            timestamp=config.anchor_day, text=anchor_text))

    corpus.sort()
    return corpus, oracle


def default_config(**overrides) -> SynthConfig:
    """A self-contained neuro-flavored configuration usable out of the box."""
    groups = [
        SynthGroup("vascular", "Vascular", "Vascular"),
        SynthGroup("neoplasm", "Neoplasm", "Neoplasm"),
        SynthGroup("infection", "Infection", "Infection"),
        SynthGroup("trauma", "Trauma", "Trauma"),
    ]
    categories = [
        SynthCategory(
            "stroke", "Ischemic stroke", "Ischemic stroke", "434", "vascular",
            overlapping=[
                "Imaging concerning for ischemic stroke in the left MCA territory.",
                "Prior ischemic stroke with residual deficits noted.",
                "Findings compatible with subacute ischemic stroke.",
            ],
            paraphrased=[
                "Sudden right sided weakness and slurred speech began this morning.",
                "Face drooping with garbled words on waking.",
                "Transient arm numbness resolving within minutes last week.",
                            'Left arm clumsiness with facial droop noted by family.',
                'Word salad and right hand weakness since last night.',
                'Hemiparesis with gaze preference toward one side.',
            ]),
        SynthCategory(
            "hemorrhage", "Intracerebral hemorrhage", "Intracerebral hemorrhage",
            "431", "vascular",
            overlapping=[
                "CT shows acute intracerebral hemorrhage in the basal ganglia.",
                "Small intracerebral hemorrhage with surrounding edema.",
                "Stable appearance of the known intracerebral hemorrhage.",
            ],
            paraphrased=[
                "Worst headache ever with vomiting and rising pressures.",
                "On warfarin with supratherapeutic INR and new confusion.",
                "Sudden collapse while lifting with unequal pupils.",
                            'Thunderclap onset with declining consciousness in the field.',
                'Deep bleed with mass effect on initial imaging.',
                'Hypertensive crisis with midline shift and stupor.',
            ]),
        SynthCategory(
            "aneurysm", "Cerebral aneurysm", "Cerebral aneurysm", "437.3", "vascular",
            overlapping=[
                "Saccular cerebral aneurysm at the anterior communicating artery.",
                "Known cerebral aneurysm followed with serial imaging.",
                "Cerebral aneurysm measuring four millimeters unchanged.",
            ],
            paraphrased=[
                "Ballooning arterial outpouching near the circle pattern on angiogram.",
                "Screening found a berry shaped bulge in a vessel wall.",
                "Pulsatile fullness behind the eye with double vision.",
                            'Dilated vascular sac near the skull base on angiography.',
                'Focal outpouching of an intracranial vessel monitored yearly.',
                'Third nerve palsy with a dilated pupil from vascular compression.',
            ]),
        SynthCategory(
            "glioma", "Malignant glioma", "Malignant glioma", "191", "neoplasm",
            overlapping=[
                "Enhancing mass suspicious for malignant glioma.",
                "Biopsy confirmed high grade malignant glioma.",
                "Interval growth concerning for recurrent glioma.",
            ],
            paraphrased=[
                "New seizures with an enhancing lesion and surrounding edema.",
                "Progressive morning headaches with personality change over weeks.",
                "Expanding infiltrative process crossing the corpus callosum.",
                            'Infiltrating tumor with necrotic core on contrast study.',
                'Rapidly enlarging intra axial growth with midline involvement.',
                'New focal deficits from an aggressive appearing lesion.',
            ]),
        SynthCategory(
            "meningioma", "Benign meningioma", "Benign meningioma", "225.2", "neoplasm",
            overlapping=[
                "Dural based mass consistent with benign meningioma.",
                "Stable meningioma along the falx.",
                "Calcified meningioma without interval change.",
            ],
            paraphrased=[
                "Slow growing extra axial lesion with a dural tail.",
                "Incidental rounded lesion abutting the convexity.",
                "Well circumscribed extra axial finding followed yearly.",
                            'Extra axial mass with a broad dural attachment.',
                'Slowly enlarging lesion indenting the cortex without invasion.',
                'Asymptomatic dural lesion found during unrelated workup.',
            ]),
        SynthCategory(
            "metastasis", "Brain metastasis", "Brain metastasis", "198.3", "neoplasm",
            overlapping=[
                "Multiple lesions consistent with brain metastasis.",
                "Solitary brain metastasis from lung primary.",
                "New brain metastasis despite systemic therapy.",
            ],
            paraphrased=[
                "History compatible with spread from a lung tumor now with new neurologic complaints.",
                "Ring enhancing lesions at the gray white junction.",
                "Known malignancy with multiple new enhancing foci.",
                            'Multiple enhancing deposits with vasogenic edema.',
                'Known breast cancer with new cranial lesions.',
                'Secondary spread suspected from systemic malignancy.',
            ]),
        SynthCategory(
            "meningitis", "Bacterial meningitis", "Bacterial meningitis",
            "320", "infection",
            overlapping=[
                "CSF profile consistent with bacterial meningitis.",
                "Treated for bacterial meningitis with IV antibiotics.",
                "Recovering from confirmed bacterial meningitis.",
            ],
            paraphrased=[
                "Fever with neck stiffness and photophobia since yesterday.",
                "Lumbar puncture shows cloudy fluid and high opening pressure.",
                "Rigors and a petechial rash prompted urgent workup.",
                            'Nuchal rigidity with positive kernig sign on exam.',
                'Febrile with altered mentation and leukocytosis.',
                'Purulent spinal fluid with low glucose on tap.',
            ]),
        SynthCategory(
            "abscess", "Intracranial abscess", "Intracranial abscess",
            "324.0", "infection",
            overlapping=[
                "Rim enhancing collection concerning for intracranial abscess.",
                "Intracranial abscess with restricted diffusion.",
                "Intracranial abscess smaller after drainage.",
            ],
            paraphrased=[
                "Recent dental procedure followed by fevers and focal deficits.",
                "Pus pocket with a capsule seen on contrast study.",
                "Walled collection tracking from the mastoid air cells.",
                            'Fluctuant collection with surrounding cerebritis.',
                'Fever with a ring lesion and central restricted signal.',
                'Postoperative infection organizing into a cavity.',
            ]),
        SynthCategory(
            "encephalitis", "Viral encephalitis", "Viral encephalitis",
            "323.9", "infection",
            overlapping=[
                "Temporal lobe signal suggestive of viral encephalitis.",
                "Viral encephalitis suspected after CSF PCR.",
                "Improving viral encephalitis on repeat imaging.",
            ],
            paraphrased=[
                "Acute confusion with fever and new memory problems.",
                "Behavioral change and low grade temperature for days.",
                "Word finding difficulty after a flu like illness.",
                            'Herpes suspected with limbic signal changes.',
                'Seizures and psychosis after a prodromal fever.',
                'Autoimmune panel sent for rapidly progressive confusion.',
            ]),
        SynthCategory(
            "contusion", "Cerebral contusion", "Cerebral contusion", "851", "trauma",
            overlapping=[
                "Frontal cerebral contusion after the fall.",
                "Hemorrhagic cerebral contusion on repeat imaging.",
                "Small cerebral contusion managed conservatively.",
            ],
            paraphrased=[
                "Struck head in a motor vehicle collision with brief blackout.",
                "Bruised tissue under the impact site after assault.",
                "Helmetless bicycle accident with bleeding under the coup site.",
                            'Coup contrecoup bruising after blunt head trauma.',
                'Hemorrhagic foci in the frontal poles after the crash.',
                'Post traumatic swelling with petechial bleeds.',
            ]),
        SynthCategory(
            "subdural", "Subdural hematoma", "Subdural hematoma", "852.2", "trauma",
            overlapping=[
                "Crescentic subdural hematoma along the right convexity.",
                "Chronic subdural hematoma with midline shift.",
                "Subdural hematoma stable in size today.",
            ],
            paraphrased=[
                "Elderly on blood thinners with repeated falls this month.",
                "Slow venous ooze under the skull after a minor knock.",
                "Crescent shaped fluid along the brain surface in an older faller.",
                            'Crescentic collection compressing the hemisphere.',
                'Anticoagulated faller with headache and drowsiness.',
                'Mixed density fluid layer over the convexity.',
            ]),
        SynthCategory(
            "skull_fracture", "Skull fracture", "Skull fracture", "803", "trauma",
            overlapping=[
                "Depressed skull fracture over the parietal bone.",
                "Linear skull fracture without displacement.",
                "Healing skull fracture on follow up imaging.",
            ],
            paraphrased=[
                "Palpable step off on the cranium after the accident.",
                "Break in the cranial vault seen on bone windows.",
                "Battle sign and raccoon eyes noted in the trauma bay.",
                            'Depressed bone fragment over the vertex after assault.',
                'Basilar break with hemotympanum after the fall.',
                'Cranial vault disruption on trauma windows.',
            ]),
    ]
    distractors = [
        "Vital signs stable and afebrile this morning.",
        "Patient resting comfortably without acute distress.",
        "Medication list reviewed and reconciled.",
        "Diet advanced as tolerated.",
        "Ambulating in hallway with steady gait.",
        "Laboratory values within normal limits.",
        "Follow up appointment scheduled with primary care.",
        "No acute events overnight.",
        "Electrolytes repleted per protocol.",
        "Physical therapy evaluation completed.",
        "Family meeting held to discuss goals.",
        "Incision clean dry and intact.",
        "Denies chest discomfort or palpitations.",
        "Sleep improved with current regimen.",
        "Social work consulted for discharge planning.",
        "Home medications resumed at prior doses.",
        "Wound check unremarkable today.",
        "Nutrition consult placed.",
        # Pertinent negatives: share description vocabulary without being
        # evidence, so word matching gets realistic graded false positives.
        "Prior imaging of the brain reviewed.",
        "No new hemorrhage or fracture identified.",
        "Chronic small vessel changes without stroke or mass.",
        "No aneurysm or abscess seen on prior angiogram.",
        "Screening negative for meningitis and encephalitis.",
        "No evidence of glioma or meningioma previously.",
        "Old contusion and hematoma fully resolved.",
        "No malignant features on earlier workup.",
        "Benign appearance of incidental findings last year.",
        "Cerebral volumes appropriate for age.",
        "Skull base unremarkable on previous study.",
        "Subdural spaces clear on last scan.",
        "Viral illness resolved last month.",
        "Bacterial cultures negative to date.",
        "Ischemic changes absent on prior exam.",
        "Intracranial compartments unremarkable before today.",
        "Intracerebral architecture preserved on old study.",
        "No metastasis on staging workup.",
    ]
    cfg = SynthConfig(groups=groups, categories=categories, distractors=distractors)
    for key, value in overrides.items():
        if not hasattr(cfg, key):
            raise TypeError(f"unknown config field {key!r}")
        setattr(cfg, key, value)
    return cfg
