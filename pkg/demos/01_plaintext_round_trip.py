"""From CoNLL-U to the one-line plaintext format and back.

Run from the repository root:  python3 demos/01_plaintext_round_trip.py
"""

from pathlib import Path

from corefkit import clean, deserialize, extract_entities, read_conllu, serialize, write_conllu

data = Path(__file__).resolve().parent.parent / "tests" / "data" / "small.conllu"
docs = read_conllu(data)
cd = extract_entities(docs[0])

# %% Entities live in the Entity attribute of MISC. Each one is a list of mentions.
for e in cd.entities:
    print(e.id, [" ".join(cd.document.node_index()[n].form for n in m.nodes) for m in e.mentions])

# %% A document becomes one line. Zeros are "##" tokens right after their parent.
line = serialize(cd)
print(line)
print(serialize(cd, include_annotations=False))  # what a system gets as input

# %% The line restores onto the original file, used as a skeleton.
back = deserialize(line, docs[0])
assert back.entity_structure() == cd.entity_structure()

# %% Model output is rarely that tidy. Here a word was paraphrased, one was left out,
# a mention was never closed and a stray closing bracket appeared.
noisy = "Mr.|[e1 Brown|e1] watched the|[e2 dog|e2] It|[e2]e9] ran ##|[e1] to house|[e3"
fixed = clean(noisy, docs[0])
print(fixed)
restored = deserialize(fixed, docs[0])
print(write_conllu([restored.document]))

# %% Multi-word tokens are split into syntactic words unless asked otherwise.
spanish = extract_entities(docs[1])
print(serialize(spanish))
print(serialize(spanish, mwt_surface=True))
