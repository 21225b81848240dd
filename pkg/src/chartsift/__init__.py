"""chartsift: rank sentences from a patient's note history against diagnosis-category queries.

The package covers the full pipeline: diagnosis-category hierarchies with
code mapping (:mod:`chartsift.hierarchy`), patient corpora and a synthetic
generator with a planted-evidence oracle (:mod:`chartsift.corpus`,
:mod:`chartsift.synth`), training-instance extraction
(:mod:`chartsift.extraction`), sentence splitting / TF-IDF
(:mod:`chartsift.lexical`), the attention-pointer ranking model
(:mod:`chartsift.model`, :mod:`chartsift.encoder`), the distantly
supervised training loop (:mod:`chartsift.training`), ranking metrics
(:mod:`chartsift.metrics`), an HTTP service (:mod:`chartsift.service`) and
a command-line driver (:mod:`chartsift.cli`).
"""

__version__ = "0.1.0"
