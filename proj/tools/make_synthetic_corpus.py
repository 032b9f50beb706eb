#!/usr/bin/env python3
"""Writes data/synthetic_corpus.jsonl: a small labeled English/Bangla corpus.

The vocabulary is separable by class on purpose; a handful of fragments carry
a label their wording does not support, so a perfect score is not expected.
Output is deterministic for a given --seed.
"""
import argparse
import json
import random

ENTITIES_EN = ["bKash", "Nagad", "Rocket", "Upay", "the mobile wallet operator", "the agent network",
               "the payment provider", "the central bank"]
ENTITIES_BN = ["বিকাশ", "নগদ", "রকেট", "উপায়", "মোবাইল ব্যাংকিং প্রতিষ্ঠান", "এজেন্ট", "কেন্দ্রীয় ব্যাংক"]

TAILS_EN = ["", " on Monday", " in Dhaka", " this week", " according to officials", " in Chattogram",
            " last month"]
TAILS_BN = ["", " গতকাল", " ঢাকায়", " এই সপ্তাহে", " চট্টগ্রামে", " গত মাসে"]

PHRASES = {
    "negative": {
        "en": ["was accused of fraud by dozens of customers",
               "agents stole money from customer accounts",
               "faces a money laundering probe",
               "was linked to an illegal hundi racket",
               "customers lost savings in a scam",
               "staff were arrested for embezzlement",
               "users complained of harassment and fake calls",
               "was fined for laundering suspicious transfers"],
        "bn": ["এর বিরুদ্ধে প্রতারণার অভিযোগ উঠেছে",
               "এর এজেন্ট গ্রাহকের টাকা চুরি করেছে",
               "এর মাধ্যমে অর্থ পাচার হয়েছে",
               "এর জালিয়াতি চক্রের সদস্য গ্রেপ্তার হয়েছে",
               "এর গ্রাহকরা বড় ক্ষতির শিকার হয়েছেন",
               "এর বিরুদ্ধে হয়রানির অভিযোগ বাড়ছে",
               "এর হুন্ডি চক্র ধরা পড়েছে"],
    },
    "neutral": {
        "en": ["announced a new schedule for agent hours",
               "published its annual report",
               "held a meeting with regulators",
               "released an app update",
               "opened a new branch office",
               "updated its service charges table",
               "shared figures on monthly transactions",
               "appointed a new chief executive"],
        "bn": ["নতুন সময়সূচি ঘোষণা করেছে",
               "বার্ষিক প্রতিবেদন প্রকাশ করেছে",
               "নিয়ন্ত্রকদের সঙ্গে বৈঠক করেছে",
               "অ্যাপের হালনাগাদ সংস্করণ প্রকাশ করেছে",
               "নতুন শাখা খোলার কথা জানিয়েছে",
               "মাসিক লেনদেনের তথ্য প্রকাশ করেছে",
               "নতুন প্রধান নির্বাহী নিয়োগ দিয়েছে"],
    },
    "positive": {
        "en": ["won an award for excellent digital service",
               "made remittance faster and safer",
               "earned praise from happy customers",
               "showed great growth in financial inclusion",
               "helped farmers receive payments easily",
               "was celebrated for outstanding support"],
        "bn": ["সেরা ডিজিটাল সেবার পুরস্কার পেয়েছে",
               "এর সেবায় গ্রাহকরা খুব সন্তুষ্ট",
               "এর লেনদেন এখন আরও দ্রুত ও নিরাপদ",
               "প্রবাসী আয় পাঠানো সহজ করে প্রশংসা পেয়েছে",
               "গ্রাহক সেবায় চমৎকার উন্নতি করেছে",
               "কৃষকদের সহজে টাকা পৌঁছে দিয়ে সফল হয়েছে"],
    },
}

# Roughly the skew of real screening data: most text is neutral.
CLASS_WEIGHTS = {"negative": 0.22, "neutral": 0.58, "positive": 0.20}
NOISE_RATE = 0.02


def sentence(rng, label, lang):
    if lang == "en":
        s = f"{rng.choice(ENTITIES_EN)} {rng.choice(PHRASES[label]['en'])}{rng.choice(TAILS_EN)}."
        return s[0].upper() + s[1:]
    if lang == "bn":
        return f"{rng.choice(ENTITIES_BN)}{rng.choice(TAILS_BN)} {rng.choice(PHRASES[label]['bn'])}।"
    # Code-mixed: Bangla clause followed by an English one, same sentiment.
    return (f"{rng.choice(ENTITIES_BN)} {rng.choice(PHRASES[label]['bn'])}, "
            f"{rng.choice(ENTITIES_EN)} {rng.choice(PHRASES[label]['en'])}.")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--fragments", type=int, default=300)
    ap.add_argument("--output", default="data/synthetic_corpus.jsonl")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    labels = list(CLASS_WEIGHTS)
    weights = [CLASS_WEIGHTS[k] for k in labels]
    docs, frags = [], []
    seen = set()
    made = 0
    doc_no = 0
    while made < args.fragments:
        doc_no += 1
        doc_id = f"syn-{doc_no:03d}"
        n = min(rng.randint(3, 5), args.fragments - made)
        texts = []
        for index in range(n):
            label = rng.choices(labels, weights)[0]
            lang = rng.choices(["en", "bn", "mixed"], [0.45, 0.45, 0.10])[0]
            wording = label
            if rng.random() < NOISE_RATE:
                wording = rng.choice([k for k in labels if k != label])
            text = sentence(rng, wording, lang)
            while text in seen:
                text = sentence(rng, wording, lang)
            seen.add(text)
            texts.append(text)
            frags.append({"kind": "frag", "id": f"{doc_id}#{index}", "doc_id": doc_id, "index": index,
                          "text": text, "lang": {"en": "english", "bn": "bangla", "mixed": "mixed"}[lang],
                          "label": label})
            made += 1
        body = " ".join(texts)
        docs.append({"kind": "doc", "id": doc_id, "source": "manual", "origin_ref": "synthetic:" + doc_id,
                     "fetched_at": "2024-01-01T00:00:00Z", "raw_text": body, "cleaned_text": body})

    with open(args.output, "w", encoding="utf-8") as out:
        for record in docs + frags:
            out.write(json.dumps(record, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
