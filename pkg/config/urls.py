"""
URL configuration for the MPOC toolkit project.

The `urlpatterns` list routes URLs to views. For more information please see:
    https://docs.djangoproject.com/en/4.2/topics/http/urls/
"""
from django.contrib import admin
from django.urls import include, path

# Admin site customization
admin.site.site_header = "MPOC Toolkit Administration"
admin.site.site_title = "MPOC Toolkit Admin"
admin.site.index_title = "Registered problems and saved runs"

urlpatterns = [
    path('admin/', admin.site.urls),
    path('', include('mpoc.urls')),
]
