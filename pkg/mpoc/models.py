"""
MPOC Toolkit Models

Persisted state of the toolkit. The numerical modules never touch the
database; these models only store user input and command output.

Models:
    - RegisteredProblem: user-registered catalog entry (JSON problem document)
    - RunRecord: optional saved output of a management command run
"""

from typing import Optional

from django.core.exceptions import ValidationError
from django.db import models
from django.urls import reverse

from .catalog import BUILTINS, CatalogEntry, DocumentedPoint
from .exceptions import ProblemFileError
from .problem_files import documented_points, problem_from_document
from .problems import MpocProblem


# ========== REGISTERED PROBLEM MODEL ==========
class RegisteredProblem(models.Model):
    """
    A catalog entry defined by a JSON problem document.

    Design Decisions:
    - The document is stored verbatim in a JSONField and rebuilt on lookup;
      no derived numerical data is cached
    - Names are slugs so they can appear in URLs and on the command line

    Business Logic:
    - catalog() consults built-ins first, so a stored entry never shadows them
    - clean() parses the document; an invalid document cannot be saved through
      forms, the admin or ``manage.py catalog --register``
    """

    name = models.SlugField(
        max_length=100,
        unique=True,
        help_text="Catalog name used by --problem and the API",
    )
    description = models.TextField(
        max_length=1000,
        blank=True,
        help_text="Free text shown in catalog listings",
    )
    document = models.JSONField(
        help_text="Problem document: n, quadratic_f, linear_h, linear_g, coordinate_F1, coordinate_F2",
    )
    created_at = models.DateTimeField(
        auto_now_add=True,
        help_text="When the problem was registered",
    )
    updated_at = models.DateTimeField(
        auto_now=True,
        help_text="Last time the document was changed",
    )

    def clean(self):
        super().clean()
        if self.name in BUILTINS or self.name.startswith('instability_perturbed'):
            raise ValidationError({'name': f"'{self.name}' is a built-in catalog name"})
        try:
            problem_from_document(self.document, source=self.name or '<document>')
            documented_points(self.document, source=self.name or '<document>')
        except ProblemFileError as exc:
            raise ValidationError({'document': str(exc)}) from exc

    def build(self) -> MpocProblem:
        """Rebuild the problem from the stored document."""
        return problem_from_document(self.document, source=self.name)

    def as_catalog_entry(self) -> CatalogEntry:
        points = documented_points(self.document, source=self.name)
        return CatalogEntry(
            name=self.name,
            problem=self.build(),
            description=self.description or self.document.get('description', ''),
            stationary_points=tuple(DocumentedPoint(tuple(p), '') for p in points),
        )

    def get_absolute_url(self):
        return reverse('mpoc:api_catalog_entry', kwargs={'name': self.name})

    def __str__(self):
        return self.name

    class Meta:
        ordering = ['name']
        verbose_name = "Registered Problem"
        verbose_name_plural = "Registered Problems"


# ========== RUN RECORD MODEL ==========
class RunRecord(models.Model):
    """
    Saved output of one management command run.

    Design Decision: the JSON-lines records are stored as a list in one
    JSONField rather than one row per record; a run is always read whole.

    Business Logic:
    - Written only when a command is given ``--save``
    - verdict mirrors the exit status: positive (0), negative (2), error (1)
    """

    class Verdict(models.TextChoices):
        POSITIVE = 'positive', 'Positive'
        NEGATIVE = 'negative', 'Negative'
        ERROR = 'error', 'Error'

    subcommand = models.CharField(
        max_length=20,
        db_index=True,
        help_text="classify, regularize, scno, landscape, catalog or selftest",
    )
    problem = models.CharField(
        max_length=200,
        blank=True,
        help_text="Catalog name or problem file path, empty for selftest",
    )
    verdict = models.CharField(
        max_length=10,
        choices=Verdict.choices,
        help_text="Outcome of the run",
    )
    seed = models.IntegerField(
        default=42,
        help_text="Seed used by randomized parts of the run",
    )
    records = models.JSONField(
        default=list,
        blank=True,
        help_text="The JSON records the run printed, in order",
    )
    created_at = models.DateTimeField(
        auto_now_add=True,
        db_index=True,
        help_text="When the run finished",
    )

    @classmethod
    def verdict_for(cls, status: int) -> str:
        return {0: cls.Verdict.POSITIVE, 2: cls.Verdict.NEGATIVE}.get(status, cls.Verdict.ERROR)

    def record_count(self) -> int:
        return len(self.records or [])

    def summary(self) -> Optional[dict]:
        """The last record of the run, which is the summary for most subcommands."""
        return self.records[-1] if self.records else None

    def __str__(self):
        label = self.problem or '-'
        return f"{self.subcommand} {label} ({self.verdict})"

    class Meta:
        ordering = ['-created_at']
        verbose_name = "Run Record"
        verbose_name_plural = "Run Records"
        indexes = [
            models.Index(fields=['subcommand', '-created_at'], name='mpoc_run_subcmd_idx'),
            models.Index(fields=['verdict'], name='mpoc_run_verdict_idx'),
        ]
