from django.urls import path

from . import views

app_name = 'mpoc'

urlpatterns = [
    # ========== API ENDPOINTS ==========
    # Read-only endpoints that return JSON data
    path('api/catalog/', views.api_catalog_list, name='api_catalog_list'),
    path('api/catalog/<str:name>/', views.api_catalog_entry, name='api_catalog_entry'),
    path('api/runs/', views.api_runs_list, name='api_runs_list'),

    # Healthcheck
    path('health/', views.health, name='health'),
]
