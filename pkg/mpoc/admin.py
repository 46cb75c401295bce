"""
Django admin configuration for the MPOC toolkit models.
"""

from django.contrib import admin
from django.utils.html import format_html

from .models import RegisteredProblem, RunRecord


@admin.register(RegisteredProblem)
class RegisteredProblemAdmin(admin.ModelAdmin):
    """Registered problems; documents are validated by the model's clean()."""

    list_display = ('name', 'dimension', 'pair_count', 'created_at', 'updated_at')
    search_fields = ('name', 'description')
    ordering = ('name',)

    fieldsets = (
        ('Problem', {
            'fields': ('name', 'description', 'document')
        }),
        ('Timestamps', {
            'fields': ('created_at', 'updated_at'),
            'classes': ('collapse',)
        }),
    )

    readonly_fields = ('created_at', 'updated_at')

    def dimension(self, obj):
        return obj.document.get('n', '-') if isinstance(obj.document, dict) else '-'
    dimension.short_description = 'n'

    def pair_count(self, obj):
        if not isinstance(obj.document, dict):
            return '-'
        return len(obj.document.get('coordinate_F1', []))
    pair_count.short_description = 'k'


@admin.register(RunRecord)
class RunRecordAdmin(admin.ModelAdmin):
    """Saved command runs, read-only."""

    list_display = ('subcommand', 'problem', 'verdict_badge', 'seed', 'record_count', 'created_at')
    list_filter = ('subcommand', 'verdict', 'created_at')
    search_fields = ('problem',)
    ordering = ('-created_at',)
    date_hierarchy = 'created_at'
    readonly_fields = ('subcommand', 'problem', 'verdict', 'seed', 'records', 'created_at')

    def verdict_badge(self, obj):
        colour = {
            RunRecord.Verdict.POSITIVE: 'green',
            RunRecord.Verdict.NEGATIVE: 'orange',
        }.get(obj.verdict, 'red')
        return format_html('<span style="color: {}; font-weight: bold;">{}</span>', colour, obj.verdict)
    verdict_badge.short_description = 'Verdict'

    def record_count(self, obj):
        return obj.record_count()
    record_count.short_description = 'Records'

    def has_add_permission(self, request):
        return False
