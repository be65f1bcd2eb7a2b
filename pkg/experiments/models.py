from django.db import models
from django.utils import timezone


class ExperimentRun(models.Model):
    class Status(models.TextChoices):
        RUNNING = "running"
        PASSED = "passed"
        FAILED = "failed"
        ERROR = "error"

    name = models.CharField(max_length=64)
    seed = models.BigIntegerField()
    status = models.CharField(max_length=16, choices=Status.choices, default=Status.RUNNING)
    config = models.JSONField(default=dict)
    output_dir = models.CharField(max_length=512)
    started_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ["-started_at"]

    def __str__(self):
        return f"{self.name} (seed {self.seed}): {self.status}"

    def finish(self, status):
        self.status = status
        self.finished_at = timezone.now()
        self.save(update_fields=["status", "finished_at"])
